#pragma once

// Detection metrics for a trained potential: per-protein native rank among
// decoys, energy/RMSD correlation, and the quality (RMSD) of the decoy the
// potential likes best, plus set-level aggregates and CSV emission.
//
// Ranking is pessimistic for the native: a decoy whose energy ties the
// native's (within 1e-9) counts as outranking it, so reported detection never
// benefits from tie luck.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "kbpot/geometry.hpp"
#include "kbpot/parallel.hpp"
#include "kbpot/potential.hpp"
#include "kbpot/textutil.hpp"
#include "kbpot/types.hpp"

namespace kbpot::evaluation {

constexpr double kTieTolerance = 1e-9;

/// Sample Pearson correlation (1/(N-1) convention) via streaming co-moments;
/// nullopt when either input has zero variance.
inline std::optional<double> correlation(const std::vector<double>& energies,
                                         const std::vector<double>& distances) {
  if (energies.size() != distances.size()) {
    throw LengthMismatch("correlation: input lengths differ (" + std::to_string(energies.size()) +
                         " vs " + std::to_string(distances.size()) + ")");
  }
  const std::size_t n = energies.size();
  if (n < 2) throw Error("correlation: need at least 2 points");
  double mean_e = 0.0, mean_d = 0.0, m2_e = 0.0, m2_d = 0.0, co = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double de = energies[i] - mean_e;
    mean_e += de / static_cast<double>(i + 1);
    const double dd = distances[i] - mean_d;
    mean_d += dd / static_cast<double>(i + 1);
    m2_e += de * (energies[i] - mean_e);
    m2_d += dd * (distances[i] - mean_d);
    co += de * (distances[i] - mean_d);
  }
  if (m2_e == 0.0 || m2_d == 0.0) return std::nullopt;
  return co / std::sqrt(m2_e * m2_d);
}

struct DecoyScore {
  std::string decoy_id;
  double rmsd = 0.0;
  double energy = 0.0;
};

struct ProteinEval {
  std::string protein_id;
  std::size_t native_rank = 1;  // 1 = native beats every decoy
  double native_energy = 0.0;
  double best_decoy_rmsd = 0.0;            // RMSD of the lowest-energy decoy
  std::optional<double> correlation;       // energy vs RMSD over decoys
  std::size_t n_ties = 0;                  // decoys tied with the native
  std::vector<DecoyScore> decoys;          // scatter data, ensemble order
};

inline double decoy_rmsd(const DecoyEnsemble& ens, const Decoy& decoy, bool recompute) {
  if (!recompute) {
    if (const auto table = ens.lookup_precomputed_rmsd(decoy.id)) return *table;
  }
  return geometry::rmsd(ens.native, decoy.trace);
}

inline ProteinEval rank_native(const DecoyEnsemble& ensemble,
                               const potential::PotentialParams& params,
                               bool recompute_rmsd = true) {
  ProteinEval eval;
  eval.protein_id = ensemble.protein_id;
  eval.native_energy = potential::energy(ensemble.native, params);
  eval.decoys.reserve(ensemble.decoys.size());

  std::size_t below_or_tied = 0;
  std::size_t best = 0;
  for (std::size_t d = 0; d < ensemble.decoys.size(); ++d) {
    const Decoy& decoy = ensemble.decoys[d];
    DecoyScore score;
    score.decoy_id = decoy.id;
    score.energy = potential::energy(decoy.trace, params);
    score.rmsd = decoy_rmsd(ensemble, decoy, recompute_rmsd);
    if (score.energy <= eval.native_energy + kTieTolerance) ++below_or_tied;
    if (std::abs(score.energy - eval.native_energy) <= kTieTolerance) ++eval.n_ties;
    eval.decoys.push_back(std::move(score));
    if (eval.decoys[d].energy < eval.decoys[best].energy) best = d;
  }
  eval.native_rank = 1 + below_or_tied;
  eval.best_decoy_rmsd = eval.decoys[best].rmsd;

  if (eval.decoys.size() >= 2) {
    std::vector<double> energies, rmsds;
    energies.reserve(eval.decoys.size());
    rmsds.reserve(eval.decoys.size());
    for (const auto& s : eval.decoys) {
      energies.push_back(s.energy);
      rmsds.push_back(s.rmsd);
    }
    eval.correlation = correlation(energies, rmsds);
  }
  return eval;
}

struct EvalSummary {
  std::size_t n_proteins = 0;
  std::size_t n_firsts = 0;          // proteins whose native ranks first
  double average_rank = 0.0;
  double average_best_decoy_rmsd = 0.0;
};

struct EvalResult {
  EvalSummary summary;
  std::vector<ProteinEval> proteins;
};

inline EvalResult evaluate_set(const std::vector<DecoyEnsemble>& ensembles,
                               const potential::PotentialParams& params, unsigned threads = 1,
                               bool recompute_rmsd = true) {
  if (ensembles.empty()) throw Error("evaluate_set: no ensembles");
  EvalResult result;
  result.proteins.resize(ensembles.size());
  parallel::parallel_for(ensembles.size(), threads, [&](std::size_t p) {
    result.proteins[p] = rank_native(ensembles[p], params, recompute_rmsd);
  });
  EvalSummary& s = result.summary;
  s.n_proteins = ensembles.size();
  double rank_sum = 0.0, rmsd_sum = 0.0;
  for (const auto& eval : result.proteins) {
    if (eval.native_rank == 1) ++s.n_firsts;
    rank_sum += static_cast<double>(eval.native_rank);
    rmsd_sum += eval.best_decoy_rmsd;
  }
  s.average_rank = rank_sum / static_cast<double>(s.n_proteins);
  s.average_best_decoy_rmsd = rmsd_sum / static_cast<double>(s.n_proteins);
  return result;
}

// ---------------------------------------------------------------------------
// CSV outputs: per_protein.csv, scatter/<protein_id>.csv, corr_hist.csv
// (20 bins of width 0.1 over [-1, 1]; undefined correlations are skipped).
// ---------------------------------------------------------------------------

inline void write_eval_outputs(const EvalResult& result, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "scatter");

  auto open = [](const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
  };

  {
    std::ofstream out = open(out_dir / "per_protein.csv");
    out << "protein_id,native_rank,native_energy,best_decoy_rmsd,correlation\n";
    for (const auto& p : result.proteins) {
      out << p.protein_id << ',' << p.native_rank << ',' << text::format_g17(p.native_energy)
          << ',' << text::format_g17(p.best_decoy_rmsd) << ','
          << (p.correlation ? text::format_g17(*p.correlation) : std::string("undefined")) << '\n';
    }
    if (!out) throw Error("failed writing per_protein.csv");
  }

  for (const auto& p : result.proteins) {
    std::ofstream out = open(out_dir / "scatter" / (p.protein_id + ".csv"));
    out << "decoy_id,rmsd,energy\n";
    for (const auto& s : p.decoys) {
      out << s.decoy_id << ',' << text::format_g17(s.rmsd) << ',' << text::format_g17(s.energy)
          << '\n';
    }
    if (!out) throw Error("failed writing scatter/" + p.protein_id + ".csv");
  }

  {
    constexpr int kBins = 20;
    std::vector<std::size_t> counts(kBins, 0);
    for (const auto& p : result.proteins) {
      if (!p.correlation) continue;
      int bin = static_cast<int>(std::floor((*p.correlation + 1.0) / 0.1));
      if (bin < 0) bin = 0;
      if (bin >= kBins) bin = kBins - 1;  // correlation exactly +1 lands in the top bin
      ++counts[static_cast<std::size_t>(bin)];
    }
    std::ofstream out = open(out_dir / "corr_hist.csv");
    out << "bin_low,bin_high,count\n";
    for (int b = 0; b < kBins; ++b) {
      const double lo = -1.0 + 0.1 * b;
      out << text::format_g12(lo) << ',' << text::format_g12(lo + 0.1) << ','
          << counts[static_cast<std::size_t>(b)] << '\n';
    }
    if (!out) throw Error("failed writing corr_hist.csv");
  }
}

}  // namespace kbpot::evaluation
