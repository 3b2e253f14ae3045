#pragma once

// Shared value types: 3-vectors, amino acid codes, Ca traces and decoy
// ensembles, plus the error hierarchy used across the library.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kbpot {

inline constexpr std::string_view kVersion = "0.1.0";

/// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A residue code that is not one of the 20 canonical amino acids.
struct UnknownResidue : Error {
  using Error::Error;
};

/// Two sequences/vectors that must have equal length do not.
struct LengthMismatch : Error {
  using Error::Error;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  bool operator==(const Vec3&) const = default;
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator*(double s, Vec3 v) { return v *= s; }
inline Vec3 operator/(Vec3 v, double s) { return v *= 1.0 / s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// The 20 canonical amino acids, ordered lexicographically by 3-letter code.
enum class AminoAcid : std::uint8_t {
  ALA, ARG, ASN, ASP, CYS, GLN, GLU, GLY, HIS, ILE,
  LEU, LYS, MET, PHE, PRO, SER, THR, TRP, TYR, VAL,
};

inline constexpr int kAminoAcidCount = 20;

inline constexpr std::string_view kAminoAcidCode3[kAminoAcidCount] = {
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE",
    "LEU", "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
};

inline std::string_view to_code3(AminoAcid aa) {
  return kAminoAcidCode3[static_cast<int>(aa)];
}

inline std::optional<AminoAcid> amino_from_code3(std::string_view code) {
  for (int i = 0; i < kAminoAcidCount; ++i) {
    if (kAminoAcidCode3[i] == code) return static_cast<AminoAcid>(i);
  }
  return std::nullopt;
}

/// amino_from_code3 that throws UnknownResidue instead of returning nullopt.
inline AminoAcid require_amino(std::string_view code) {
  auto aa = amino_from_code3(code);
  if (!aa) throw UnknownResidue("unknown residue code '" + std::string(code) + "'");
  return *aa;
}

struct Residue {
  AminoAcid type = AminoAcid::ALA;
  Vec3 pos;
};

/// A Ca-only backbone trace: one position per residue, in sequence order.
struct CaTrace {
  std::string id;
  std::vector<Residue> residues;

  std::size_t size() const { return residues.size(); }

  /// Enforces the trace invariants: at least 2 residues, finite positions,
  /// and no two consecutive residues at the identical position.
  void validate() const {
    if (residues.size() < 2) {
      throw Error("trace '" + id + "': needs at least 2 residues, has " +
                  std::to_string(residues.size()));
    }
    for (std::size_t i = 0; i < residues.size(); ++i) {
      if (!is_finite(residues[i].pos)) {
        throw Error("trace '" + id + "': non-finite coordinates at residue " + std::to_string(i));
      }
      if (i > 0 && residues[i].pos == residues[i - 1].pos) {
        throw Error("trace '" + id + "': residues " + std::to_string(i - 1) + " and " +
                    std::to_string(i) + " share the same position");
      }
    }
  }
};

inline bool same_sequence(const CaTrace& a, const CaTrace& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.residues[i].type != b.residues[i].type) return false;
  }
  return true;
}

struct Decoy {
  std::string id;
  CaTrace trace;
};

/// One native structure plus its decoy set. Decoys always share the native's
/// length and sequence; loaders drop anything that does not.
struct DecoyEnsemble {
  std::string protein_id;
  CaTrace native;
  std::vector<Decoy> decoys;
  /// Optional externally supplied decoy RMSDs, keyed by decoy id. Used only
  /// when a caller opts out of recomputing RMSDs.
  std::vector<std::pair<std::string, double>> precomputed_rmsd;

  void validate() const {
    native.validate();
    for (const auto& d : decoys) {
      d.trace.validate();
      if (!same_sequence(native, d.trace)) {
        throw Error("ensemble '" + protein_id + "': decoy '" + d.id +
                    "' does not match the native sequence");
      }
    }
  }

  std::optional<double> lookup_precomputed_rmsd(std::string_view decoy_id) const {
    for (const auto& [id, r] : precomputed_rmsd) {
      if (id == decoy_id) return r;
    }
    return std::nullopt;
  }
};

}  // namespace kbpot
