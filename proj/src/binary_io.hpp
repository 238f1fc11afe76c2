#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "gdakg/error.hpp"

namespace gdakg::detail {

static_assert(std::endian::native == std::endian::little,
              "embedding files are written in host order, which must be little-endian");

inline constexpr char kEmbeddingMagic[4] = {'G', 'D', 'A', 'E'};

struct EmbeddingHeader {
  std::uint32_t kind = 0;
  std::uint32_t dim = 0;
  std::uint64_t entities = 0;
  std::uint64_t relations = 0;
};

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError(path.string(), 0, "truncated embedding file");
  }
  return value;
}

inline void write_header(std::ostream& out, const EmbeddingHeader& h) {
  out.write(kEmbeddingMagic, 4);
  write_pod(out, h.kind);
  write_pod(out, h.dim);
  write_pod(out, h.entities);
  write_pod(out, h.relations);
}

inline EmbeddingHeader read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kEmbeddingMagic, 4) != 0) {
    throw ParseError(path.string(), 0, "not an embedding file (bad magic)");
  }
  EmbeddingHeader h;
  h.kind = read_pod<std::uint32_t>(in, path);
  h.dim = read_pod<std::uint32_t>(in, path);
  h.entities = read_pod<std::uint64_t>(in, path);
  h.relations = read_pod<std::uint64_t>(in, path);
  return h;
}

inline void write_floats(std::ostream& out, std::span<const double> values) {
  std::vector<float> buf(values.begin(), values.end());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

inline void read_floats(std::istream& in, std::span<double> values,
                        const std::filesystem::path& path) {
  std::vector<float> buf(values.size());
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    throw ParseError(path.string(), 0, "truncated embedding file");
  }
  std::copy(buf.begin(), buf.end(), values.begin());
}

}  // namespace gdakg::detail
