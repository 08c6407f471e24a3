#pragma once

// Binary field dumps: raw little-endian float64 values (complex values as
// interleaved re/im) next to a JSON metadata file with the shape and a CRC-32
// of the payload.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>
#include <zlib.h>

#include "kgap/error.hpp"
#include "kgap/grid.hpp"

namespace kgap {

namespace fs = std::filesystem;

struct FieldMeta {
  std::string name;
  std::string kind;  // scalar | hermitian | tensor
  int n = 0;
  int N = 0;
  std::size_t points = 0;
  std::size_t values = 0;  // float64 count in the payload
  std::string layout;
  std::uint32_t crc32 = 0;
};

namespace detail {

inline std::uint32_t crc_of(const std::vector<unsigned char>& bytes) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t len = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    c = crc32(c, bytes.data() + off, static_cast<uInt>(len));
    off += len;
  }
  return static_cast<std::uint32_t>(c);
}

inline std::vector<unsigned char> encode_le(std::span<const double> v) {
  std::vector<unsigned char> out(v.size() * 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t b = std::bit_cast<std::uint64_t>(v[i]);
    for (int k = 0; k < 8; ++k) out[i * 8 + k] = static_cast<unsigned char>(b >> (8 * k));
  }
  return out;
}

inline std::vector<double> decode_le(const std::vector<unsigned char>& bytes) {
  std::vector<double> v(bytes.size() / 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t b = 0;
    for (int k = 0; k < 8; ++k) b |= static_cast<std::uint64_t>(bytes[i * 8 + k]) << (8 * k);
    v[i] = std::bit_cast<double>(b);
  }
  return v;
}

/// Writes through a temporary file and renames, so readers never see a torn file.
inline void write_atomic(const fs::path& path, const void* data, std::size_t size) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    f.flush();
    if (!f) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline void write_text_atomic(const fs::path& path, const std::string& text) {
  write_atomic(path, text.data(), text.size());
}

inline std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(f), {});
}

inline std::string read_text(const fs::path& path) {
  const auto b = read_bytes(path);
  return std::string(b.begin(), b.end());
}

inline nlohmann::ordered_json meta_json(const FieldMeta& m) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["kind"] = m.kind;
  j["n"] = m.n;
  j["N"] = m.N;
  j["points"] = m.points;
  j["values"] = m.values;
  j["layout"] = m.layout;
  j["encoding"] = "float64 little-endian";
  j["crc32"] = m.crc32;
  return j;
}

}  // namespace detail

inline fs::path field_payload_path(const fs::path& dir, const std::string& name) { return dir / (name + ".f64"); }
inline fs::path field_meta_path(const fs::path& dir, const std::string& name) { return dir / (name + ".json"); }

/// Payload first, metadata second: a dump counts as present once its metadata exists.
inline FieldMeta write_raw_field(const fs::path& dir, const Grid& grid, const std::string& name,
                                 const std::string& kind, const std::string& layout, std::span<const double> v) {
  fs::create_directories(dir);
  FieldMeta m;
  m.name = name;
  m.kind = kind;
  m.n = grid.dim();
  m.N = grid.resolution();
  m.points = grid.size();
  m.values = v.size();
  m.layout = layout;
  const auto bytes = detail::encode_le(v);
  m.crc32 = detail::crc_of(bytes);
  detail::write_atomic(field_payload_path(dir, name), bytes.data(), bytes.size());
  detail::write_text_atomic(field_meta_path(dir, name), detail::meta_json(m).dump(2) + "\n");
  return m;
}

inline FieldMeta write_field(const fs::path& dir, const Grid& grid, const std::string& name,
                             std::span<const double> f) {
  grid.check_size(f.size());
  return write_raw_field(dir, grid, name, "scalar", "point-major, one real value per point", f);
}

inline FieldMeta write_field(const fs::path& dir, const Grid& grid, const std::string& name,
                             const HermitianField& h) {
  const auto c = h.data();
  std::vector<double> v(c.size() * 2);
  std::memcpy(v.data(), c.data(), v.size() * sizeof(double));
  return write_raw_field(dir, grid, name, "hermitian",
                         "point-major, n x n row-major, complex as interleaved re/im", v);
}

inline FieldMeta write_field(const fs::path& dir, const Grid& grid, const std::string& name, const TensorField& t) {
  const auto c = t.data();
  std::vector<double> v(c.size() * 2);
  std::memcpy(v.data(), c.data(), v.size() * sizeof(double));
  return write_raw_field(dir, grid, name, "tensor",
                         "point-major, R[i][jbar][k][lbar] row-major, complex as interleaved re/im", v);
}

/// Reads a dump and verifies shape and checksum against its metadata.
inline std::vector<double> read_raw_field(const fs::path& dir, const Grid& grid, const std::string& name,
                                          const std::string& kind) {
  const fs::path mp = field_meta_path(dir, name);
  const fs::path pp = field_payload_path(dir, name);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(detail::read_text(mp));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, "unreadable field metadata " + mp.string() + ": " + e.what());
  }
  if (meta.value("kind", "") != kind || meta.value("n", 0) != grid.dim() || meta.value("N", 0) != grid.resolution()) {
    throw Error(ErrorCode::Io, "field " + pp.string() + " does not match the expected " + kind + " shape");
  }
  const auto bytes = detail::read_bytes(pp);
  const std::size_t values = meta.value("values", std::size_t{0});
  if (bytes.size() != values * 8) {
    throw Error(ErrorCode::Checksum, "checksum error in " + pp.string() + ": payload has " +
                                         std::to_string(bytes.size()) + " bytes, expected " +
                                         std::to_string(values * 8));
  }
  const std::uint32_t want = meta.value("crc32", std::uint32_t{0});
  if (detail::crc_of(bytes) != want) {
    throw Error(ErrorCode::Checksum, "checksum error in " + pp.string() + ": CRC-32 mismatch");
  }
  return detail::decode_le(bytes);
}

inline ScalarField read_scalar_field(const fs::path& dir, const Grid& grid, const std::string& name) {
  ScalarField f = read_raw_field(dir, grid, name, "scalar");
  if (f.size() != grid.size()) throw Error(ErrorCode::Io, "field " + name + " has the wrong length");
  return f;
}

inline HermitianField read_hermitian_field(const fs::path& dir, const Grid& grid, const std::string& name) {
  const std::vector<double> v = read_raw_field(dir, grid, name, "hermitian");
  HermitianField h(grid.dim(), grid.size());
  if (v.size() != h.data().size() * 2) throw Error(ErrorCode::Io, "field " + name + " has the wrong length");
  std::memcpy(static_cast<void*>(h.data().data()), v.data(), v.size() * sizeof(double));
  return h;
}

inline bool field_exists(const fs::path& dir, const std::string& name) {
  return fs::exists(field_meta_path(dir, name)) && fs::exists(field_payload_path(dir, name));
}

}  // namespace kgap
