#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmae/config.hpp"
#include "gmae/error.hpp"
#include "gmae/model.hpp"

namespace gmae {

// On-disk model snapshot. Fixed little-endian layout:
//   "GMAE"                     4-byte magic
//   u32 version                currently 1
//   u64 header_len             byte length of the JSON header that follows
//   header                     JSON: {"config": {...}, "view_dims": [...]}
//   u64 count                  number of tensors
//   count * entry              u32 name_len, name bytes, u64 rows, u64 cols,
//                              rows*cols f64 values (row major)
static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace detail {

inline void write_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out) throw IoError("checkpoint: write failed");
}

inline void read_bytes(std::istream& in, void* p, std::size_t n, const char* what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n))
    throw IoError(std::string("checkpoint: truncated file while reading ") + what);
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  write_bytes(out, &v, sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v;
  read_bytes(in, &v, sizeof(T), what);
  return v;
}

}  // namespace detail

constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const std::string& path, const TrainConfig& cfg,
                            const std::vector<std::size_t>& view_dims,
                            ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");

  detail::write_bytes(out, "GMAE", 4);
  detail::write_pod<std::uint32_t>(out, kCheckpointVersion);

  nlohmann::json header{{"config", to_json(cfg)}, {"view_dims", view_dims}};
  const std::string htext = header.dump();
  detail::write_pod<std::uint64_t>(out, htext.size());
  detail::write_bytes(out, htext.data(), htext.size());

  std::size_t count = 0;
  params.for_each_param([&](const std::string&, Matrix&) { ++count; });
  detail::write_pod<std::uint64_t>(out, count);

  params.for_each_param([&](const std::string& name, Matrix& m) {
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    detail::write_bytes(out, name.data(), name.size());
    detail::write_pod<std::uint64_t>(out, m.rows);
    detail::write_pod<std::uint64_t>(out, m.cols);
    detail::write_bytes(out, m.data.data(), m.data.size() * sizeof(double));
  });
  out.flush();
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

struct Checkpoint {
  TrainConfig config;
  std::vector<std::size_t> view_dims;
  ModelParams params;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);

  char magic[4];
  detail::read_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, "GMAE", 4) != 0)
    throw IoError("checkpoint: bad magic in " + path);
  const auto version = detail::read_pod<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw IoError("checkpoint: unsupported version " + std::to_string(version));

  const auto hlen = detail::read_pod<std::uint64_t>(in, "header length");
  std::string htext(hlen, '\0');
  detail::read_bytes(in, htext.data(), hlen, "header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: corrupt header: ") + e.what());
  }
  if (!header.contains("config") || !header.contains("view_dims"))
    throw IoError("checkpoint: header missing config or view_dims");

  Checkpoint ck;
  ck.config = train_config_from_json(header["config"]);
  ck.view_dims = header["view_dims"].get<std::vector<std::size_t>>();

  ModelDims dims;
  dims.view_dims = ck.view_dims;
  dims.d_z = ck.config.d_z;
  dims.d_c = ck.config.d_c;
  dims.hidden = ck.config.hidden;
  dims.disc_hidden = ck.config.disc_hidden;
  dims.validate();
  ck.params = make_model(dims, ck.config.seed);

  std::map<std::string, Matrix*> slots;
  ck.params.for_each_param(
      [&](const std::string& name, Matrix& m) { slots[name] = &m; });

  const auto count = detail::read_pod<std::uint64_t>(in, "tensor count");
  if (count != slots.size())
    throw IoError("checkpoint: tensor count " + std::to_string(count) +
                  " does not match model (" + std::to_string(slots.size()) + ")");

  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_pod<std::uint32_t>(in, "tensor name length");
    std::string name(name_len, '\0');
    detail::read_bytes(in, name.data(), name_len, "tensor name");
    const auto rows = detail::read_pod<std::uint64_t>(in, "tensor rows");
    const auto cols = detail::read_pod<std::uint64_t>(in, "tensor cols");
    auto it = slots.find(name);
    if (it == slots.end())
      throw IoError("checkpoint: unexpected tensor \"" + name + "\"");
    Matrix& dst = *it->second;
    if (dst.rows != rows || dst.cols != cols)
      throw IoError("checkpoint: shape mismatch for \"" + name + "\"");
    detail::read_bytes(in, dst.data.data(), dst.data.size() * sizeof(double),
                       "tensor values");
  }
  return ck;
}

}  // namespace gmae
