#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "curvedfield/cli/config.hpp"
#include "curvedfield/geometry.hpp"
#include "curvedfield/hash.hpp"

namespace curvedfield::cli {

/// Byte layout (all integers and floats little-endian):
///
///   offset size field
///   0      8    magic "CFIELD01"
///   8      4    u32 format version (1)
///   12     4    u32 geometry kind (0 open, 1 flat, 2 closed)
///   16     8    f64 curvature K
///   24     4    i32 spin weight
///   28     4    u32 value width in bytes (16: complex f64 pair)
///   32     8    u64 seed
///   40     8    u64 n_chi
///   48     8    u64 n_theta
///   56     8    u64 n_phi
///   64     8    u64 provenance hash (config hash)
///   72     8    u64 body checksum: FNV-1a 64 of every byte after the header
///   80     8    i64 creation time, unix seconds (not covered by any checksum)
///   88     4    u32 theta rule (0 Gauss-Legendre in cos theta, 1 explicit list)
///   92     4    u32 field kind (0 complex, 1 real)
///   96     4    u32 l_max
///   100    20   reserved, zero
///   120    8    u64 header checksum: FNV-1a 64 of bytes 0..119 with the time zeroed
///
/// Body: chi[n_chi], theta[n_theta], phi[n_phi] as f64, then the values as
/// (re, im) f64 pairs, chi outer, theta middle, phi inner.
inline constexpr std::size_t header_size = 128;
inline constexpr char field_magic[8] = {'C', 'F', 'I', 'E', 'L', 'D', '0', '1'};
inline constexpr std::uint32_t field_version = 1;
inline constexpr std::uint32_t value_width = 16;

enum class ThetaRule : std::uint32_t { gauss_legendre = 0, explicit_list = 1 };

struct FieldFile {
  CurvatureKind kind = CurvatureKind::flat;
  double K = 0.0;
  int spin = 0;
  std::uint64_t seed = 0;
  std::uint64_t provenance = 0;
  std::int64_t timestamp = 0;
  ThetaRule theta_rule = ThetaRule::gauss_legendre;
  bool real_field = false;
  std::uint32_t l_max = 0;
  std::vector<double> chi;
  std::vector<double> theta;
  std::vector<double> phi;
  std::vector<std::complex<double>> values;

  std::size_t cardinality() const { return chi.size() * theta.size() * phi.size(); }
  Geometry geometry() const {
    switch (kind) {
      case CurvatureKind::open: return Geometry::open(K);
      case CurvatureKind::flat: return Geometry::flat();
      case CurvatureKind::closed: return Geometry::closed(K);
    }
    return Geometry::flat();
  }
};

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::string& buf, std::size_t offset, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  std::memcpy(buf.data() + offset, bytes.data(), sizeof(T));
}

template <class T>
T get(const std::string& buf, std::size_t offset) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), buf.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

inline std::uint64_t header_checksum(std::string header) {
  put<std::int64_t>(header, 80, 0);
  Fnv1a h;
  h.update(header.data(), 120);
  return h.digest();
}

inline std::uint32_t kind_code(CurvatureKind k) {
  switch (k) {
    case CurvatureKind::open: return 0;
    case CurvatureKind::flat: return 1;
    case CurvatureKind::closed: return 2;
  }
  return 1;
}

}  // namespace detail

inline std::string encode(const FieldFile& f) {
  if (f.values.size() != f.cardinality()) {
    throw domain_error("FieldFile: value count " + std::to_string(f.values.size()) + " does not match grid " +
                       std::to_string(f.cardinality()));
  }
  std::string body((f.chi.size() + f.theta.size() + f.phi.size()) * 8 + f.values.size() * value_width, '\0');
  std::size_t at = 0;
  for (const auto* axis : {&f.chi, &f.theta, &f.phi})
    for (double v : *axis) {
      detail::put(body, at, v);
      at += 8;
    }
  for (const auto& v : f.values) {
    detail::put(body, at, v.real());
    detail::put(body, at + 8, v.imag());
    at += 16;
  }
  std::string header(header_size, '\0');
  std::memcpy(header.data(), field_magic, 8);
  detail::put<std::uint32_t>(header, 8, field_version);
  detail::put<std::uint32_t>(header, 12, detail::kind_code(f.kind));
  detail::put<double>(header, 16, f.K);
  detail::put<std::int32_t>(header, 24, f.spin);
  detail::put<std::uint32_t>(header, 28, value_width);
  detail::put<std::uint64_t>(header, 32, f.seed);
  detail::put<std::uint64_t>(header, 40, f.chi.size());
  detail::put<std::uint64_t>(header, 48, f.theta.size());
  detail::put<std::uint64_t>(header, 56, f.phi.size());
  detail::put<std::uint64_t>(header, 64, f.provenance);
  Fnv1a body_hash;
  body_hash.update(body.data(), body.size());
  detail::put<std::uint64_t>(header, 72, body_hash.digest());
  detail::put<std::int64_t>(header, 80, f.timestamp);
  detail::put<std::uint32_t>(header, 88, static_cast<std::uint32_t>(f.theta_rule));
  detail::put<std::uint32_t>(header, 92, f.real_field ? 1u : 0u);
  detail::put<std::uint32_t>(header, 96, f.l_max);
  detail::put<std::uint64_t>(header, 120, detail::header_checksum(header));
  return header + body;
}

inline FieldFile decode(const std::string& bytes, const std::string& name = "<field>") {
  const auto bad = [&](const std::string& why) { return io_error("field file " + name + ": " + why); };
  if (bytes.size() < header_size) throw bad("shorter than the 128-byte header");
  if (std::memcmp(bytes.data(), field_magic, 8) != 0) throw bad("bad magic");
  const std::string header = bytes.substr(0, header_size);
  if (detail::get<std::uint64_t>(header, 120) != detail::header_checksum(header)) throw bad("header checksum mismatch");
  if (detail::get<std::uint32_t>(header, 8) != field_version) throw bad("unsupported format version");
  if (detail::get<std::uint32_t>(header, 28) != value_width) throw bad("unsupported value width");
  FieldFile f;
  const auto kind = detail::get<std::uint32_t>(header, 12);
  if (kind > 2) throw bad("unknown geometry kind");
  f.kind = kind == 0 ? CurvatureKind::open : kind == 1 ? CurvatureKind::flat : CurvatureKind::closed;
  f.K = detail::get<double>(header, 16);
  f.spin = detail::get<std::int32_t>(header, 24);
  f.seed = detail::get<std::uint64_t>(header, 32);
  const auto n_chi = detail::get<std::uint64_t>(header, 40);
  const auto n_theta = detail::get<std::uint64_t>(header, 48);
  const auto n_phi = detail::get<std::uint64_t>(header, 56);
  f.provenance = detail::get<std::uint64_t>(header, 64);
  f.timestamp = detail::get<std::int64_t>(header, 80);
  const auto rule = detail::get<std::uint32_t>(header, 88);
  if (rule > 1) throw bad("unknown theta rule");
  f.theta_rule = static_cast<ThetaRule>(rule);
  f.real_field = detail::get<std::uint32_t>(header, 92) == 1;
  f.l_max = detail::get<std::uint32_t>(header, 96);
  const std::size_t limit = std::size_t{1} << 16;
  if (n_chi >= limit || n_theta >= limit || n_phi >= limit) throw bad("implausible grid size");
  const std::size_t count = n_chi * n_theta * n_phi;
  const std::size_t expected = header_size + (n_chi + n_theta + n_phi) * 8 + count * value_width;
  if (bytes.size() != expected) {
    throw bad("payload length " + std::to_string(bytes.size() - header_size) + " does not match grid (expected " +
              std::to_string(expected - header_size) + ")");
  }
  Fnv1a body_hash;
  body_hash.update(bytes.data() + header_size, bytes.size() - header_size);
  if (body_hash.digest() != detail::get<std::uint64_t>(header, 72)) throw bad("payload checksum mismatch");
  std::size_t at = header_size;
  for (auto [axis, n] : {std::pair{&f.chi, n_chi}, std::pair{&f.theta, n_theta}, std::pair{&f.phi, n_phi}}) {
    axis->resize(n);
    for (auto& v : *axis) {
      v = detail::get<double>(bytes, at);
      at += 8;
    }
  }
  f.values.resize(count);
  for (auto& v : f.values) {
    v = {detail::get<double>(bytes, at), detail::get<double>(bytes, at + 8)};
    at += 16;
  }
  return f;
}

inline void write_field_file(const std::string& path, const FieldFile& f) {
  const std::string bytes = encode(f);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("write to '" + path + "' failed");
}

inline FieldFile read_field_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read field file '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return decode(s.str(), path);
}

}  // namespace curvedfield::cli
