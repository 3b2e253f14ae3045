#pragma once

// The potential core: a normalized uniform cubic B-spline basis over
// Ca-Ca distances, residue-pair indexing, sparse featurization of traces,
// linear energy evaluation, and the parameter file format.
//
// The default basis has 8 functions. Basis p is supported on
// [2.2 + 0.6*(p-1), 2.2 + 0.6*(p-1) + 2.4] angstroms (four 0.6 A knot
// intervals), peaks at 2/3 in the middle of its support, takes the value 1/6
// one knot to either side of the peak, and the shifted copies sum to 1
// wherever four of them overlap (r in [4.0, 6.4] for the default basis).

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kbpot/textutil.hpp"
#include "kbpot/types.hpp"

namespace kbpot::potential {

struct BadBasisIndex : Error {
  using Error::Error;
};

/// Feature/parameter sets built with different basis configurations.
struct ConfigMismatch : Error {
  using Error::Error;
};

/// Malformed or inconsistent parameter file.
struct ParamsFormatError : Error {
  using Error::Error;
};

struct SplineBasisConfig {
  int n_basis = 8;
  double knot_start = 2.2;    // left edge of the first basis support (A)
  double knot_step = 0.6;     // knot spacing (A)
  double support_width = 2.4; // each basis spans four knot intervals (A)

  bool operator==(const SplineBasisConfig&) const = default;

  double support_begin(int basis_index) const {
    return knot_start + knot_step * (basis_index - 1);
  }
  double support_end(int basis_index) const { return support_begin(basis_index) + support_width; }
  /// Distance beyond which every basis function is zero.
  double cutoff() const { return support_end(n_basis); }

  void validate() const {
    if (n_basis < 1) throw Error("basis: n_basis must be >= 1");
    if (!(knot_step > 0.0) || !(knot_start >= 0.0)) throw Error("basis: bad knot layout");
    if (std::abs(support_width - 4.0 * knot_step) > 1e-12) {
      throw Error("basis: support_width must equal 4 knot steps for a cubic B-spline");
    }
  }
};

/// Normalized uniform cubic B-spline on knots {0,1,2,3,4}: zero outside
/// (0,4), 1/6 at u=1 and u=3, 2/3 at the u=2 peak, C2 everywhere.
inline double cubic_bspline_unit(double u) {
  if (u <= 0.0 || u >= 4.0) return 0.0;
  if (u < 1.0) return u * u * u / 6.0;
  if (u < 2.0) return (-3.0 * u * u * u + 12.0 * u * u - 12.0 * u + 4.0) / 6.0;
  if (u < 3.0) return (3.0 * u * u * u - 24.0 * u * u + 60.0 * u - 44.0) / 6.0;
  const double w = 4.0 - u;
  return w * w * w / 6.0;
}

/// Value of basis function `basis_index` (1-based) at distance r.
inline double bspline_eval(int basis_index, double r, const SplineBasisConfig& cfg = {}) {
  if (basis_index < 1 || basis_index > cfg.n_basis) {
    throw BadBasisIndex("basis index " + std::to_string(basis_index) + " outside 1.." +
                        std::to_string(cfg.n_basis));
  }
  if (!std::isfinite(r)) throw Error("bspline_eval: non-finite distance");
  return cubic_bspline_unit((r - cfg.support_begin(basis_index)) / cfg.knot_step);
}

inline constexpr int kPairCount = kAminoAcidCount * (kAminoAcidCount + 1) / 2;  // 210

/// Index of the unordered residue pair {a, b} in row-major upper-triangle
/// order over the 20 amino acids sorted by 3-letter code: (ALA,ALA)=0,
/// (ALA,ARG)=1, ..., (VAL,VAL)=209. Symmetric in its arguments.
inline int pair_index(AminoAcid a, AminoAcid b) {
  int i = static_cast<int>(a);
  int j = static_cast<int>(b);
  if (i < 0 || i >= kAminoAcidCount || j < 0 || j >= kAminoAcidCount) {
    throw UnknownResidue("pair_index: amino acid value out of range");
  }
  if (i > j) std::swap(i, j);
  return i * kAminoAcidCount - i * (i - 1) / 2 + (j - i);
}

inline int pair_index(std::string_view code_a, std::string_view code_b) {
  return pair_index(require_amino(code_a), require_amino(code_b));
}

/// Inverse of pair_index: the (smaller, larger) amino acid pair.
inline std::pair<AminoAcid, AminoAcid> pair_from_index(int index) {
  if (index < 0 || index >= kPairCount) throw Error("pair_from_index: index out of range");
  for (int i = 0; i < kAminoAcidCount; ++i) {
    const int row_start = i * kAminoAcidCount - i * (i - 1) / 2;
    const int row_len = kAminoAcidCount - i;
    if (index < row_start + row_len) {
      return {static_cast<AminoAcid>(i), static_cast<AminoAcid>(i + index - row_start)};
    }
  }
  throw Error("pair_from_index: unreachable");
}

/// Sparse feature vector of a trace: for each (pair type, basis) cell, the
/// sum of basis values over all residue pairs of that type. Keys are flat
/// indices pair_index * n_basis + (basis_index - 1), kept sorted.
struct FeatureVector {
  std::vector<std::pair<int, double>> entries;
  SplineBasisConfig basis;

  double dot(const std::vector<double>& x) const {
    double e = 0.0;
    for (const auto& [k, v] : entries) e += x[static_cast<std::size_t>(k)] * v;
    return e;
  }
};

/// Featurizes a Ca trace: every residue pair (i, j) with j - i >=
/// min_separation and distance inside some basis support contributes its
/// basis values to the pair-type cell. min_separation of 1 keeps all pairs.
inline FeatureVector featurize(const CaTrace& trace, const SplineBasisConfig& cfg = {},
                               int min_separation = 1) {
  cfg.validate();
  if (min_separation < 1) throw Error("featurize: min_separation must be >= 1");
  const int n_params = kPairCount * cfg.n_basis;
  std::vector<double> dense(static_cast<std::size_t>(n_params), 0.0);
  const double cutoff = cfg.cutoff();
  const std::size_t n = trace.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + static_cast<std::size_t>(min_separation); j < n; ++j) {
      const double r = distance(trace.residues[i].pos, trace.residues[j].pos);
      if (r <= cfg.knot_start || r >= cutoff) continue;
      const int pi = pair_index(trace.residues[i].type, trace.residues[j].type);
      const double u0 = (r - cfg.knot_start) / cfg.knot_step;
      for (int p = 1; p <= cfg.n_basis; ++p) {
        const double v = cubic_bspline_unit(u0 - static_cast<double>(p - 1));
        if (v > 0.0) dense[static_cast<std::size_t>(pi * cfg.n_basis + p - 1)] += v;
      }
    }
  }
  FeatureVector f;
  f.basis = cfg;
  for (int k = 0; k < n_params; ++k) {
    if (dense[static_cast<std::size_t>(k)] != 0.0) {
      f.entries.emplace_back(k, dense[static_cast<std::size_t>(k)]);
    }
  }
  return f;
}

/// Sparse difference a - b (decoy minus native). Exact zeros are dropped.
inline FeatureVector delta_features(const FeatureVector& a, const FeatureVector& b) {
  if (!(a.basis == b.basis)) throw ConfigMismatch("delta_features: basis configs differ");
  FeatureVector out;
  out.basis = a.basis;
  std::size_t ia = 0;
  std::size_t ib = 0;
  while (ia < a.entries.size() || ib < b.entries.size()) {
    int key;
    double value;
    if (ib >= b.entries.size() || (ia < a.entries.size() && a.entries[ia].first < b.entries[ib].first)) {
      key = a.entries[ia].first;
      value = a.entries[ia].second;
      ++ia;
    } else if (ia >= a.entries.size() || b.entries[ib].first < a.entries[ia].first) {
      key = b.entries[ib].first;
      value = -b.entries[ib].second;
      ++ib;
    } else {
      key = a.entries[ia].first;
      value = a.entries[ia].second - b.entries[ib].second;
      ++ia;
      ++ib;
    }
    if (value != 0.0) out.entries.emplace_back(key, value);
  }
  return out;
}

/// Trained potential: one weight per (pair type, basis) cell plus the
/// metadata needed to reproduce featurization.
struct PotentialParams {
  std::vector<double> x;  // kPairCount * basis.n_basis weights, flat-indexed
  SplineBasisConfig basis;
  std::string scheme = "LPKP1";  // LPKP1 | LPKP2
  double epsilon = 0.01;
  double lower_bound = -4.0;
  double upper_bound = 4.0;
  int min_separation = 1;

  void validate() const {
    basis.validate();
    const std::size_t expected = static_cast<std::size_t>(kPairCount) *
                                 static_cast<std::size_t>(basis.n_basis);
    if (x.size() != expected) {
      throw ParamsFormatError("params: expected " + std::to_string(expected) + " values, have " +
                              std::to_string(x.size()));
    }
    if (scheme != "LPKP1" && scheme != "LPKP2") {
      throw ParamsFormatError("params: unknown scheme '" + scheme + "'");
    }
    for (double v : x) {
      if (!std::isfinite(v)) throw ParamsFormatError("params: non-finite value");
      if (v < lower_bound - 1e-9 || v > upper_bound + 1e-9) {
        throw ParamsFormatError("params: value " + text::format_g17(v) + " outside bounds [" +
                                text::format_g17(lower_bound) + ", " +
                                text::format_g17(upper_bound) + "]");
      }
    }
  }
};

/// E = sum over feature cells of x[cell] * feature[cell].
inline double energy(const FeatureVector& features, const PotentialParams& params) {
  if (!(features.basis == params.basis)) {
    throw ConfigMismatch("energy: feature basis does not match parameter basis");
  }
  return features.dot(params.x);
}

inline double energy(const CaTrace& trace, const PotentialParams& params) {
  return energy(featurize(trace, params.basis, params.min_separation), params);
}

// ---------------------------------------------------------------------------
// Parameter file format (text, written byte-identically for equal inputs):
//   kbpot-params v1
//   basis <n> <knot_start> <knot_step> <support_width>
//   scheme <LPKP1|LPKP2> epsilon <v> bounds <lo> <hi> min_separation <k>
//   <AA3> <AA3> <p> <value>     (one line per cell, pairs in index order,
//                                p = 1..n within each pair, %.17g values)
// '#' starts a comment; blank lines are ignored when reading.
// ---------------------------------------------------------------------------

inline void write_params(const PotentialParams& params, std::ostream& out) {
  params.validate();
  out << "kbpot-params v1\n";
  out << "basis " << params.basis.n_basis << ' ' << text::format_g17(params.basis.knot_start)
      << ' ' << text::format_g17(params.basis.knot_step) << ' '
      << text::format_g17(params.basis.support_width) << '\n';
  out << "scheme " << params.scheme << " epsilon " << text::format_g17(params.epsilon)
      << " bounds " << text::format_g17(params.lower_bound) << ' '
      << text::format_g17(params.upper_bound) << " min_separation " << params.min_separation
      << '\n';
  for (int pi = 0; pi < kPairCount; ++pi) {
    const auto [a, b] = pair_from_index(pi);
    for (int p = 1; p <= params.basis.n_basis; ++p) {
      const std::size_t k = static_cast<std::size_t>(pi * params.basis.n_basis + p - 1);
      out << to_code3(a) << ' ' << to_code3(b) << ' ' << p << ' ' << text::format_g17(params.x[k])
          << '\n';
    }
  }
}

inline void write_params_file(const PotentialParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_params(params, out);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline PotentialParams read_params(std::istream& in) {
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  PotentialParams params;
  int stage = 0;  // 0: magic, 1: basis, 2: scheme, 3: values
  std::vector<char> seen;
  auto fail = [](std::size_t line_no, const std::string& what) -> ParamsFormatError {
    return ParamsFormatError("params line " + std::to_string(line_no) + ": " + what);
  };
  text::for_each_line(content, [&](std::size_t line_no, std::string_view raw) {
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    if (text::trim(line).empty()) return;
    const auto tok = text::split_ws(line);
    switch (stage) {
      case 0:
        if (tok.size() != 2 || tok[0] != "kbpot-params" || tok[1] != "v1") {
          throw fail(line_no, "expected header 'kbpot-params v1'");
        }
        stage = 1;
        return;
      case 1: {
        if (tok.size() != 5 || tok[0] != "basis") throw fail(line_no, "expected basis line");
        const auto n = text::parse_long(tok[1]);
        const auto ks = text::parse_double(tok[2]);
        const auto kt = text::parse_double(tok[3]);
        const auto sw = text::parse_double(tok[4]);
        if (!n || !ks || !kt || !sw) throw fail(line_no, "unparsable basis numbers");
        params.basis.n_basis = static_cast<int>(*n);
        params.basis.knot_start = *ks;
        params.basis.knot_step = *kt;
        params.basis.support_width = *sw;
        params.x.assign(static_cast<std::size_t>(kPairCount) *
                            static_cast<std::size_t>(params.basis.n_basis),
                        0.0);
        seen.assign(params.x.size(), 0);
        stage = 2;
        return;
      }
      case 2: {
        if (tok.size() != 9 || tok[0] != "scheme" || tok[2] != "epsilon" || tok[4] != "bounds" ||
            tok[7] != "min_separation") {
          throw fail(line_no, "expected scheme line");
        }
        params.scheme = std::string(tok[1]);
        const auto eps = text::parse_double(tok[3]);
        const auto lo = text::parse_double(tok[5]);
        const auto hi = text::parse_double(tok[6]);
        const auto ms = text::parse_long(tok[8]);
        if (!eps || !lo || !hi || !ms) throw fail(line_no, "unparsable scheme numbers");
        params.epsilon = *eps;
        params.lower_bound = *lo;
        params.upper_bound = *hi;
        params.min_separation = static_cast<int>(*ms);
        stage = 3;
        return;
      }
      default: {
        if (tok.size() != 4) throw fail(line_no, "expected '<AA3> <AA3> <p> <value>'");
        const auto a = amino_from_code3(tok[0]);
        const auto b = amino_from_code3(tok[1]);
        if (!a || !b) throw fail(line_no, "unknown residue code");
        const auto p = text::parse_long(tok[2]);
        const auto v = text::parse_double(tok[3]);
        if (!p || !v) throw fail(line_no, "unparsable basis index or value");
        if (*p < 1 || *p > params.basis.n_basis) throw fail(line_no, "basis index out of range");
        const std::size_t k = static_cast<std::size_t>(pair_index(*a, *b) * params.basis.n_basis +
                                                       static_cast<int>(*p) - 1);
        if (seen[k]) throw fail(line_no, "duplicate parameter cell");
        seen[k] = 1;
        params.x[k] = *v;
        return;
      }
    }
  });
  if (stage != 3) throw ParamsFormatError("params: truncated file (missing header lines)");
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      const auto [a, b] = pair_from_index(static_cast<int>(k) / params.basis.n_basis);
      throw ParamsFormatError("params: missing cell " + std::string(to_code3(a)) + " " +
                              std::string(to_code3(b)) + " p=" +
                              std::to_string(static_cast<int>(k) % params.basis.n_basis + 1));
    }
  }
  params.validate();
  return params;
}

inline PotentialParams read_params_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open params file '" + path.string() + "'");
  return read_params(in);
}

}  // namespace kbpot::potential
