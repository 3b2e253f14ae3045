#pragma once

// Run provenance. Every artifact-producing command records what it ran with:
// the command line, the fully resolved configuration, content hashes of its
// inputs (FNV-1a 64 over bytes; directory trees hash their files in sorted
// relative-path order), the seed, tool version, and wall time.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kbpot/types.hpp"

namespace kbpot::manifest {

namespace fs = std::filesystem;

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

inline std::string hex16(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

inline std::uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for hashing");
  std::uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    h = fnv1a(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
    if (!in) break;
  }
  return h;
}

/// Hash of a directory tree: every regular file in sorted relative-path
/// order, folding in the path, a separator, and the file's content hash.
inline std::uint64_t hash_tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::vector<std::pair<std::string, fs::path>> keyed;
  keyed.reserve(files.size());
  for (const auto& p : files) keyed.emplace_back(p.lexically_relative(root).generic_string(), p);
  std::sort(keyed.begin(), keyed.end());
  std::uint64_t h = kFnvOffset;
  for (const auto& [rel, p] : keyed) {
    h = fnv1a(rel, h);
    h = fnv1a(std::string_view("\0", 1), h);
    h = fnv1a(hex16(hash_file(p)), h);
    h = fnv1a(std::string_view("\0", 1), h);
  }
  return h;
}

/// Hash of whatever the path is: file content or directory tree.
inline std::string hash_input(const fs::path& path) {
  if (fs::is_directory(path)) return hex16(hash_tree(path));
  return hex16(hash_file(path));
}

struct RunManifest {
  std::string command;                        // argv joined by spaces
  nlohmann::json config;                      // resolved configuration
  std::map<std::string, std::string> inputs;  // path -> content hash (hex)
  std::uint64_t seed = 0;
  std::string version{kVersion};
  double wall_seconds = 0.0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"command", command}, {"config", config},   {"inputs", inputs},
                          {"seed", seed},       {"version", version}, {"wall_seconds", wall_seconds}};
  }

  void write(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << to_json().dump(2) << '\n';
    if (!out) throw Error("failed writing '" + path.string() + "'");
  }
};

}  // namespace kbpot::manifest
