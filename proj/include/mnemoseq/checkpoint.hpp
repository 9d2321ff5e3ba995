#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>

#include "mnemoseq/model.hpp"

namespace mnemoseq {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts need byte swaps");

// Layout: magic "DMNM" | u32 version | u32 precision bits (32/64) |
// u32 x6 dims (V_C, V_W, m, n, n', K) | u32 epoch | f64 validation loss |
// 31 blocks in registry order, each u32 rows | u32 cols | row-major payload.
inline constexpr char kCheckpointMagic[4] = {'D', 'M', 'N', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint32_t version = kCheckpointVersion;
  int precision_bits = 32;
  ModelDims dims;
  std::uint32_t epoch = 0;
  double valid_loss = 0.0;
};

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t read_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error(std::string("truncated checkpoint: ") + what);
  return v;
}

inline double read_f64(std::istream& in, const char* what) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error(std::string("truncated checkpoint: ") + what);
  return v;
}

}  // namespace detail

template <typename S>
void save_checkpoint(const ModelParams<S>& params, std::uint32_t epoch,
                     double valid_loss, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, 4);
  detail::write_u32(out, kCheckpointVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(sizeof(S) * 8));
  const ModelDims& d = params.dims;
  for (int v : {d.char_vocab, d.word_vocab, d.embed, d.hidden, d.align, d.maxout})
    detail::write_u32(out, static_cast<std::uint32_t>(v));
  detail::write_u32(out, epoch);
  detail::write_f64(out, valid_loss);
  for (const auto& e : entries(params)) {
    detail::write_u32(out, static_cast<std::uint32_t>(e.mat->rows()));
    detail::write_u32(out, static_cast<std::uint32_t>(e.mat->cols()));
    out.write(reinterpret_cast<const char*>(e.mat->data()),
              static_cast<std::streamsize>(sizeof(S)) * e.mat->size());
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::variant<ModelParams<float>, ModelParams<double>> params;

  template <typename S>
  const ModelParams<S>& as() const {
    const auto* p = std::get_if<ModelParams<S>>(&params);
    if (!p)
      throw std::runtime_error("checkpoint precision differs from requested type");
    return *p;
  }
};

namespace detail {

template <typename S>
ModelParams<S> read_param_blocks(std::istream& in, const ModelDims& dims,
                                 const std::string& path) {
  ModelParams<S> p = ModelParams<S>::zeros(dims);
  for (auto& e : entries(p)) {
    const std::uint32_t rows = read_u32(in, e.name.c_str());
    const std::uint32_t cols = read_u32(in, e.name.c_str());
    if (rows != static_cast<std::uint32_t>(e.mat->rows()) ||
        cols != static_cast<std::uint32_t>(e.mat->cols()))
      throw std::runtime_error("checkpoint dimension mismatch in block " + e.name +
                               " of " + path);
    in.read(reinterpret_cast<char*>(e.mat->data()),
            static_cast<std::streamsize>(sizeof(S)) * e.mat->size());
    if (!in)
      throw std::runtime_error("truncated checkpoint: payload of " + e.name);
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw std::runtime_error("trailing bytes after checkpoint payload: " + path);
  return p;
}

}  // namespace detail

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kCheckpointMagic, 4))
    throw std::runtime_error("not a model checkpoint (bad magic): " + path);

  LoadedCheckpoint ck;
  ck.meta.version = detail::read_u32(in, "version");
  if (ck.meta.version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(ck.meta.version) + ": " + path);
  const std::uint32_t bits = detail::read_u32(in, "precision");
  if (bits != 32 && bits != 64)
    throw std::runtime_error("unsupported checkpoint precision tag: " + path);
  ck.meta.precision_bits = static_cast<int>(bits);

  std::uint32_t d[6];
  for (auto& v : d) v = detail::read_u32(in, "dims");
  ck.meta.dims = ModelDims{static_cast<int>(d[0]), static_cast<int>(d[1]),
                           static_cast<int>(d[2]), static_cast<int>(d[3]),
                           static_cast<int>(d[4]), static_cast<int>(d[5])};
  ck.meta.epoch = detail::read_u32(in, "epoch");
  ck.meta.valid_loss = detail::read_f64(in, "validation loss");

  if (bits == 32)
    ck.params = detail::read_param_blocks<float>(in, ck.meta.dims, path);
  else
    ck.params = detail::read_param_blocks<double>(in, ck.meta.dims, path);
  return ck;
}

}  // namespace mnemoseq
