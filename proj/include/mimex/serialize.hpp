#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mimex/errors.hpp"
#include "mimex/mlp.hpp"

namespace mimex {

// Checkpoint format: a shape header (layer dims + activation tags) followed
// by the flat parameter array as little-endian 64-bit reals.
//
//   "MLP1"
//   u32 layer_count
//   per layer: u32 in_dim, u32 out_dim, u32 activation (0 relu, 1 tanh, 2 linear)
//   f64[param_count]   (weights row-major then bias, layer by layer)
//
// Loose vectors (e.g. a policy's log-std block) use the same idea:
//   "VEC1", u32 length, f64[length]

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap64(bits);
  }
  for (int i = 0; i < 8; ++i) out.push_back(char((bits >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, const std::string& what) : bytes_(bytes), what_(what) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(std::uint8_t(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    if constexpr (std::endian::native == std::endian::big) {
      bits = __builtin_bswap64(bits);
    }
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  void magic(const char* tag) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, tag, 4) != 0) {
      throw IoError(what_ + ": bad magic, expected " + tag);
    }
    pos_ += 4;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError(what_ + ": truncated");
  }

  const std::string& bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace detail

inline std::string network_to_bytes(const MlpNetwork& net) {
  std::string out;
  out.append("MLP1");
  detail::put_u32(out, std::uint32_t(net.layer_count()));
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const auto& l = net.layer(i);
    detail::put_u32(out, std::uint32_t(l.weight.dim(1)));
    detail::put_u32(out, std::uint32_t(l.weight.dim(0)));
    detail::put_u32(out, std::uint32_t(l.act));
  }
  for (double v : net.params_flat()) detail::put_f64(out, v);
  return out;
}

inline MlpNetwork network_from_bytes(const std::string& bytes, const std::string& what = "network") {
  detail::ByteReader r(bytes, what);
  r.magic("MLP1");
  std::uint32_t layers = r.u32();
  if (layers == 0 || layers > 1024) throw IoError(what + ": implausible layer count");
  std::vector<std::size_t> dims;
  std::vector<Activation> acts;
  for (std::uint32_t i = 0; i < layers; ++i) {
    std::uint32_t in = r.u32();
    std::uint32_t out = r.u32();
    std::uint32_t act = r.u32();
    if (act > 2) throw IoError(what + ": unknown activation tag");
    if (i == 0) {
      dims.push_back(in);
    } else if (dims.back() != in) {
      throw IoError(what + ": inconsistent layer dims");
    }
    dims.push_back(out);
    acts.push_back(Activation(act));
  }
  MlpNetwork net(dims, acts);
  std::vector<double> params(net.param_count());
  for (double& v : params) v = r.f64();
  if (!r.exhausted()) throw IoError(what + ": trailing bytes");
  net.set_params_flat(params);
  return net;
}

inline void save_network(const MlpNetwork& net, const std::filesystem::path& path) {
  detail::write_file(path, network_to_bytes(net));
}

inline MlpNetwork load_network(const std::filesystem::path& path) {
  return network_from_bytes(detail::read_file(path), path.string());
}

inline void save_values(std::span<const double> values, const std::filesystem::path& path) {
  std::string out;
  out.append("VEC1");
  detail::put_u32(out, std::uint32_t(values.size()));
  for (double v : values) detail::put_f64(out, v);
  detail::write_file(path, out);
}

inline std::vector<double> load_values(const std::filesystem::path& path) {
  std::string bytes = detail::read_file(path);
  detail::ByteReader r(bytes, path.string());
  r.magic("VEC1");
  std::uint32_t n = r.u32();
  std::vector<double> values(n);
  for (double& v : values) v = r.f64();
  if (!r.exhausted()) throw IoError(path.string() + ": trailing bytes");
  return values;
}

}  // namespace mimex
