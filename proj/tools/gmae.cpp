// Command-line front end. All real work lives in gmae/cli.hpp; this file
// only declares flags and forwards parsed arguments.

#include <CLI11.hpp>

#include "gmae/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"multi-view clustering toolkit"};
  app.set_version_flag("--version", gmae::kToolVersion);
  app.require_subcommand(1);
  int rc = 0;

  auto* synth = app.add_subcommand("synth", "generate a rotated-blobs dataset");
  gmae::SynthArgs synth_args;
  synth->add_option("--out", synth_args.out_dir, "dataset directory to create");
  synth->add_option("--n", synth_args.spec.n, "sample count");
  synth->add_option("--k", synth_args.spec.k, "cluster count");
  synth->add_option("--d", synth_args.spec.d, "feature width per view");
  synth->add_option("--views", synth_args.spec.v, "view count");
  synth->add_option("--sep", synth_args.spec.sep, "distance between cluster means");
  synth->add_option("--sigma", synth_args.spec.sigma, "within-cluster deviation");
  synth->add_option("--seed", synth_args.spec.seed, "generator seed");
  synth->callback(
      [&] { rc = gmae::run_command([&] { gmae::cmd_synth(synth_args); }); });

  auto* mask = app.add_subcommand("mask", "hide views from a dataset");
  gmae::MaskArgs mask_args;
  mask->add_option("--data", mask_args.data_dir, "input dataset directory")
      ->required();
  mask->add_option("--out", mask_args.out_dir, "output dataset directory");
  mask->add_option("--missing-ratio", mask_args.ratio, "fraction of samples losing views")
      ->required();
  mask->add_option("--seed", mask_args.seed, "selection seed");
  mask->callback(
      [&] { rc = gmae::run_command([&] { gmae::cmd_mask(mask_args); }); });

  auto* train = app.add_subcommand("train", "fit the model on a dataset");
  gmae::TrainArgs train_args;
  train->add_option("--data", train_args.data_dir, "dataset directory")->required();
  train->add_option("--out", train_args.out_dir, "run output directory");
  train->add_option("--config", train_args.config_path, "training config json");
  train->add_option("--seed", train_args.seed, "override the config seed");
  train->add_option("--missing-ratio", train_args.missing_ratio,
                    "override the config missing ratio");
  train->add_option("--k", train_args.k, "override the config cluster count");
  train->callback(
      [&] { rc = gmae::run_command([&] { gmae::cmd_train(train_args); }); });

  auto* eval = app.add_subcommand("eval", "cluster a dataset with a trained model");
  gmae::EvalArgs eval_args;
  eval->add_option("--checkpoint", eval_args.checkpoint_path, "checkpoint file")
      ->required();
  eval->add_option("--data", eval_args.data_dir, "dataset directory")->required();
  eval->add_option("--out", eval_args.out_dir, "output directory");
  eval->add_option("--k", eval_args.k, "cluster count override");
  eval->callback(
      [&] { rc = gmae::run_command([&] { gmae::cmd_eval(eval_args); }); });

  auto* project = app.add_subcommand("project", "2d projection of saved embeddings");
  gmae::ProjectArgs project_args;
  project->add_option("--embeddings", project_args.embeddings_path,
                      "embeddings csv from train or eval")
      ->required();
  project->add_option("--out", project_args.out_dir, "output directory");
  project->callback(
      [&] { rc = gmae::run_command([&] { gmae::cmd_project(project_args); }); });

  auto* sweep = app.add_subcommand("sweep", "train across a parameter grid");
  gmae::SweepArgs sweep_args;
  sweep->add_option("--data", sweep_args.data_dir, "dataset directory")->required();
  sweep->add_option("--out", sweep_args.out_dir, "sweep output directory");
  sweep->add_option("--config", sweep_args.config_path, "base config json");
  sweep->add_option("--alpha", sweep_args.alpha_range, "alpha range lo:hi:step");
  sweep->add_option("--beta", sweep_args.beta_range, "beta range lo:hi:step");
  sweep->add_option("--dims", sweep_args.dims_list,
                    "comma-separated code widths (replaces the alpha/beta grid)");
  sweep->add_option("--jobs", sweep_args.jobs, "parallel training jobs");
  sweep->callback(
      [&] { rc = gmae::run_command([&] { gmae::cmd_sweep(sweep_args); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  return rc;
}
