#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lexfly/errors.hpp"
#include "lexfly/tensor.hpp"

// Checkpoint container: a UTF-8 manifest (one "name rank dims... offset"
// line per tensor, offsets relative to the payload start) terminated by
// "end", followed by little-endian float64 payloads. Round-trips are
// bit-exact.

namespace lexfly {

namespace detail {

inline void put_le64(std::ostream& os, std::uint64_t w) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(w >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t get_le64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t w = 0;
  for (int i = 0; i < 8; ++i) w |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return w;
}

}  // namespace detail

inline void save_tensors(
    const std::string& path,
    const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open " + path + " for writing");
  os << "lexfly-checkpoint 1\n";
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    os << name << ' ' << t.rank();
    for (int d : t.shape()) os << ' ' << d;
    os << ' ' << offset << '\n';
    offset += 8 * t.size();
  }
  os << "end\n";
  for (const auto& [name, t] : tensors) {
    for (double v : t.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      detail::put_le64(os, bits);
    }
  }
  if (!os) throw ParseError("write failed for " + path);
}

inline std::vector<std::pair<std::string, Tensor>> load_tensors(
    const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "lexfly-checkpoint 1")
    throw ParseError(path + ": not a lexfly checkpoint");
  struct Entry {
    std::string name;
    Shape shape;
    std::uint64_t offset;
  };
  std::vector<Entry> entries;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line == "end") break;
    std::istringstream ls(line);
    Entry e;
    int rank = -1;
    if (!(ls >> e.name >> rank) || rank < 0)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": malformed manifest line");
    e.shape.resize(rank);
    for (int i = 0; i < rank; ++i)
      if (!(ls >> e.shape[i]))
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": malformed manifest line");
    if (!(ls >> e.offset))
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": malformed manifest line");
    entries.push_back(std::move(e));
  }
  const std::streampos payload = is.tellg();
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    Tensor t(e.shape);
    is.seekg(payload + static_cast<std::streamoff>(e.offset));
    for (auto& v : t.data()) {
      std::uint64_t bits = detail::get_le64(is);
      std::memcpy(&v, &bits, 8);
    }
    if (!is)
      throw ParseError(path + ": truncated payload for tensor " + e.name);
    out.emplace_back(e.name, std::move(t));
  }
  return out;
}

}  // namespace lexfly
