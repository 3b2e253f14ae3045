#pragma once

// Potential training. Turns featurized decoy ensembles into a linear program
// whose variables are the 1680 spline weights X plus nonnegative slack
// variables S, and whose optimum (minimize sum of slack) yields a potential
// that ranks every native below its decoys by a margin epsilon wherever the
// data permit.
//
// Margin rows read dF.X + S >= epsilon, where dF = features(decoy) -
// features(native): the slack RELAXES an unattainable margin. The historical
// form with the slack subtracted (which tightens instead of relaxing, leaving
// infeasible margins unrepairable) is available behind
// paper_literal_slack_sign for comparison. The two-scheme variant adds
// distance rows dF.X <= alpha * rmsd so decoy energies cannot run away from
// their structural distance.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kbpot/geometry.hpp"
#include "kbpot/log.hpp"
#include "kbpot/lp.hpp"
#include "kbpot/parallel.hpp"
#include "kbpot/potential.hpp"
#include "kbpot/rng.hpp"
#include "kbpot/types.hpp"

namespace kbpot::training {

/// Every constraint row vanished (all decoys featurize identically to their
/// natives), so there is nothing to train on.
struct NoConstraints : Error {
  using Error::Error;
};

/// The LP solver finished without an optimum.
struct SolverFailure : Error {
  lp::Status status;
  SolverFailure(lp::Status s, const std::string& msg) : Error(msg), status(s) {}
};

enum class Scheme { LPKP1, LPKP2 };
enum class SlackGranularity { PerProtein, PerDecoy };

inline std::string_view to_string(Scheme s) { return s == Scheme::LPKP1 ? "LPKP1" : "LPKP2"; }

inline Scheme scheme_from_string(std::string_view text) {
  if (text == "LPKP1" || text == "lpkp1") return Scheme::LPKP1;
  if (text == "LPKP2" || text == "lpkp2") return Scheme::LPKP2;
  throw Error("unknown scheme '" + std::string(text) + "' (expected lpkp1 or lpkp2)");
}

struct TrainingConfig {
  Scheme scheme = Scheme::LPKP1;
  double epsilon = 0.01;
  double x_bound = 4.0;
  std::size_t decoys_per_protein = 45;
  SlackGranularity slack_granularity = SlackGranularity::PerProtein;
  int min_separation = 1;
  std::uint64_t rng_seed = 1;
  double alpha = 1.0;  // distance-row scale (two-scheme only)
  bool paper_literal_slack_sign = false;
  /// Recompute decoy RMSDs (default); otherwise use an ensemble's bundled
  /// table when present and fall back to recomputation per decoy.
  bool recompute_rmsd = true;
  potential::SplineBasisConfig basis;
  lp::SolveOptions solve_options;

  void validate() const {
    basis.validate();
    if (!(epsilon > 0.0)) throw Error("training config: epsilon must be > 0");
    if (!(x_bound > 0.0)) throw Error("training config: x_bound must be > 0");
    if (decoys_per_protein < 1) throw Error("training config: decoys_per_protein must be >= 1");
    if (min_separation < 1) throw Error("training config: min_separation must be >= 1");
    if (!(alpha > 0.0)) throw Error("training config: alpha must be > 0");
  }
};

inline double decoy_rmsd(const DecoyEnsemble& ens, const Decoy& decoy, bool recompute) {
  if (!recompute) {
    if (const auto table = ens.lookup_precomputed_rmsd(decoy.id)) return *table;
  }
  return geometry::rmsd(ens.native, decoy.trace);
}

/// Reduces an ensemble to at most k decoys spread over the whole RMSD range:
/// decoys are sorted by RMSD, the sorted list is split into k rank strata of
/// near-equal size, and one decoy is drawn uniformly per stratum. With k or
/// fewer decoys all are kept. Deterministic in (ensemble order, seed).
inline DecoyEnsemble subsample_decoys(const DecoyEnsemble& ensemble, std::size_t k,
                                      std::uint64_t seed,
                                      const std::vector<double>& rmsds) {
  if (k < 1) throw Error("subsample_decoys: k must be >= 1");
  if (rmsds.size() != ensemble.decoys.size()) {
    throw LengthMismatch("subsample_decoys: rmsd list does not match decoy count");
  }
  const std::size_t n = ensemble.decoys.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rmsds[a] < rmsds[b]; });

  DecoyEnsemble out;
  out.protein_id = ensemble.protein_id;
  out.native = ensemble.native;
  out.precomputed_rmsd = ensemble.precomputed_rmsd;
  if (n <= k) {
    for (std::size_t rank = 0; rank < n; ++rank) out.decoys.push_back(ensemble.decoys[order[rank]]);
    return out;
  }
  rng::Rng rng(seed);
  out.decoys.reserve(k);
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t lo = s * n / k;
    const std::size_t hi = (s + 1) * n / k;  // exclusive; nonempty since n > k
    const auto pick = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi) - 1));
    out.decoys.push_back(ensemble.decoys[order[pick]]);
  }
  return out;
}

inline DecoyEnsemble subsample_decoys(const DecoyEnsemble& ensemble, std::size_t k,
                                      std::uint64_t seed, bool recompute_rmsd = true) {
  std::vector<double> rmsds;
  rmsds.reserve(ensemble.decoys.size());
  for (const auto& d : ensemble.decoys) rmsds.push_back(decoy_rmsd(ensemble, d, recompute_rmsd));
  return subsample_decoys(ensemble, k, seed, rmsds);
}

/// An assembled training LP plus the bookkeeping needed to interpret its
/// solution. Rows are ordered margin block first (proteins in input order,
/// decoys in ensemble order), then the distance block in the same order.
struct BuiltLp {
  lp::LpInstance instance;
  int x_count = 0;                            // leading X variables
  std::size_t n_slacks = 0;                   // slack variables after the X block
  std::size_t n_margin = 0;
  std::size_t n_distance = 0;
  std::size_t n_excluded = 0;                 // decoys dropped for dF = 0
  std::vector<std::size_t> margin_protein;    // margin row -> protein index
  std::vector<std::size_t> margin_slack;      // margin row -> slack variable index
  std::vector<std::size_t> decoys_used;       // per protein: rows contributed
};

/// Builds the LP over the given ensembles as-is (no subsampling here; pass
/// pre-reduced ensembles). Decoys whose features match the native exactly are
/// excluded with a warning.
inline BuiltLp build_lp(const std::vector<DecoyEnsemble>& ensembles, const TrainingConfig& config,
                        unsigned threads = 1) {
  config.validate();
  if (ensembles.empty()) throw Error("build_lp: no ensembles");

  struct RowData {
    potential::FeatureVector delta;
    double rmsd = 0.0;
    std::string decoy_id;
  };
  const bool two_scheme = config.scheme == Scheme::LPKP2;
  std::vector<std::vector<RowData>> per_protein(ensembles.size());
  parallel::parallel_for(ensembles.size(), threads, [&](std::size_t p) {
    const DecoyEnsemble& ens = ensembles[p];
    const auto native_f = potential::featurize(ens.native, config.basis, config.min_separation);
    auto& rows = per_protein[p];
    rows.reserve(ens.decoys.size());
    for (const auto& decoy : ens.decoys) {
      RowData row;
      row.delta = potential::delta_features(
          potential::featurize(decoy.trace, config.basis, config.min_separation), native_f);
      if (two_scheme) row.rmsd = decoy_rmsd(ens, decoy, config.recompute_rmsd);
      row.decoy_id = decoy.id;
      rows.push_back(std::move(row));
    }
  });

  BuiltLp built;
  built.x_count = potential::kPairCount * config.basis.n_basis;
  built.decoys_used.assign(ensembles.size(), 0);

  // Count surviving rows and assign slack variables.
  const bool per_decoy = config.slack_granularity == SlackGranularity::PerDecoy;
  std::size_t surviving = 0;
  for (std::size_t p = 0; p < ensembles.size(); ++p) {
    for (const auto& row : per_protein[p]) {
      if (row.delta.entries.empty()) {
        ++built.n_excluded;
        log::warn("training", "protein '" + ensembles[p].protein_id + "': decoy '" + row.decoy_id +
                                  "' excluded (features identical to native)");
        continue;
      }
      ++surviving;
    }
  }
  if (surviving == 0) {
    throw NoConstraints("every decoy row vanished (dF = 0); nothing to train on");
  }
  built.n_slacks = per_decoy ? surviving : ensembles.size();

  lp::LpInstance& inst = built.instance;
  inst.n_vars = built.x_count + static_cast<int>(built.n_slacks);
  inst.objective.assign(static_cast<std::size_t>(inst.n_vars), 0.0);
  inst.lower.assign(static_cast<std::size_t>(inst.n_vars), -config.x_bound);
  inst.upper.assign(static_cast<std::size_t>(inst.n_vars), config.x_bound);
  for (std::size_t s = 0; s < built.n_slacks; ++s) {
    const auto v = static_cast<std::size_t>(built.x_count) + s;
    inst.objective[v] = 1.0;
    inst.lower[v] = 0.0;
    inst.upper[v] = lp::kInf;
  }

  const double slack_coeff = config.paper_literal_slack_sign ? -1.0 : 1.0;
  std::size_t next_slack = 0;
  inst.rows.reserve(surviving * (two_scheme ? 2 : 1));
  for (std::size_t p = 0; p < ensembles.size(); ++p) {
    for (const auto& row : per_protein[p]) {
      if (row.delta.entries.empty()) continue;
      const std::size_t slack_index =
          static_cast<std::size_t>(built.x_count) + (per_decoy ? next_slack++ : p);
      lp::Row margin;
      margin.coeffs.reserve(row.delta.entries.size() + 1);
      for (const auto& [key, value] : row.delta.entries) margin.coeffs.emplace_back(key, value);
      margin.coeffs.emplace_back(static_cast<int>(slack_index), slack_coeff);
      margin.rel = lp::Relation::Ge;
      margin.rhs = config.epsilon;
      inst.rows.push_back(std::move(margin));
      built.margin_protein.push_back(p);
      built.margin_slack.push_back(slack_index);
      ++built.decoys_used[p];
    }
  }
  built.n_margin = inst.rows.size();
  if (two_scheme) {
    for (std::size_t p = 0; p < ensembles.size(); ++p) {
      for (const auto& row : per_protein[p]) {
        if (row.delta.entries.empty()) continue;
        lp::Row dist;
        dist.coeffs.reserve(row.delta.entries.size());
        for (const auto& [key, value] : row.delta.entries) dist.coeffs.emplace_back(key, value);
        dist.rel = lp::Relation::Le;
        dist.rhs = config.alpha * row.rmsd;
        inst.rows.push_back(std::move(dist));
        ++built.n_distance;
      }
    }
  }
  return built;
}

struct ProteinTrainRecord {
  std::string protein_id;
  std::size_t n_decoys_used = 0;
  double slack_value = 0.0;  // summed over rows under per-decoy granularity
};

struct TrainingReport {
  lp::Status status = lp::Status::IterationLimit;
  double objective = 0.0;
  long iterations = 0;
  std::size_t n_constraints = 0;
  std::size_t n_margin = 0;
  std::size_t n_distance = 0;
  std::size_t n_excluded_rows = 0;
  std::size_t n_violated_margins = 0;  // margin rows needing slack at the optimum
  double wall_seconds = 0.0;
  std::vector<ProteinTrainRecord> proteins;
};

struct TrainResult {
  potential::PotentialParams params;
  TrainingReport report;
};

/// Full pipeline: subsample each ensemble, assemble the LP, solve it, and
/// package the X block as PotentialParams. Throws SolverFailure when the
/// solver does not reach an optimum. `built_out`, when given, receives the
/// assembled LP (for dumps and diagnostics).
inline TrainResult train(const std::vector<DecoyEnsemble>& ensembles, const TrainingConfig& config,
                         unsigned threads = 1, BuiltLp* built_out = nullptr) {
  config.validate();
  if (ensembles.empty()) throw Error("train: no ensembles");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<DecoyEnsemble> reduced(ensembles.size());
  parallel::parallel_for(ensembles.size(), threads, [&](std::size_t p) {
    reduced[p] = subsample_decoys(ensembles[p], config.decoys_per_protein,
                                  rng::derive_seed(config.rng_seed, p), config.recompute_rmsd);
  });

  BuiltLp built = build_lp(reduced, config, threads);
  log::info("training", "lp assembled: " + std::to_string(built.instance.n_vars) + " vars, " +
                            std::to_string(built.instance.rows.size()) + " rows (" +
                            std::to_string(built.n_margin) + " margin, " +
                            std::to_string(built.n_distance) + " distance)");
  if (built_out) *built_out = built;  // before the solve, so dumps survive solver failure

  const lp::Solution sol = lp::solve(built.instance, config.solve_options);
  TrainResult result;
  TrainingReport& report = result.report;
  report.status = sol.status;
  report.objective = sol.objective_value;
  report.iterations = sol.iterations;
  report.n_constraints = built.instance.rows.size();
  report.n_margin = built.n_margin;
  report.n_distance = built.n_distance;
  report.n_excluded_rows = built.n_excluded;

  if (sol.status != lp::Status::Optimal) {
    throw SolverFailure(sol.status, "lp solve finished with status '" +
                                        std::string(lp::to_string(sol.status)) + "' after " +
                                        std::to_string(sol.iterations) + " iterations");
  }

  // Margin rows that need slack: dF.X* < epsilon (X terms only).
  for (std::size_t r = 0; r < built.n_margin; ++r) {
    double dot = 0.0;
    for (const auto& [j, a] : built.instance.rows[r].coeffs) {
      if (j < built.x_count) dot += a * sol.values[static_cast<std::size_t>(j)];
    }
    if (dot < config.epsilon - 1e-9) ++report.n_violated_margins;
  }

  report.proteins.resize(ensembles.size());
  for (std::size_t p = 0; p < ensembles.size(); ++p) {
    report.proteins[p].protein_id = ensembles[p].protein_id;
    report.proteins[p].n_decoys_used = built.decoys_used[p];
  }
  if (config.slack_granularity == SlackGranularity::PerProtein) {
    for (std::size_t p = 0; p < ensembles.size(); ++p) {
      report.proteins[p].slack_value = sol.values[static_cast<std::size_t>(built.x_count) + p];
    }
  } else {
    for (std::size_t r = 0; r < built.n_margin; ++r) {
      report.proteins[built.margin_protein[r]].slack_value += sol.values[built.margin_slack[r]];
    }
  }

  result.params.x.assign(sol.values.begin(), sol.values.begin() + built.x_count);
  result.params.basis = config.basis;
  result.params.scheme = std::string(to_string(config.scheme));
  result.params.epsilon = config.epsilon;
  result.params.lower_bound = -config.x_bound;
  result.params.upper_bound = config.x_bound;
  result.params.min_separation = config.min_separation;
  result.params.validate();

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

/// JSON lines: one record per protein, then one summary record.
inline void write_report_jsonl(const TrainingReport& report, std::ostream& out) {
  for (const auto& p : report.proteins) {
    nlohmann::json rec{{"record", "protein"},
                       {"protein_id", p.protein_id},
                       {"n_decoys_used", p.n_decoys_used},
                       {"slack_value", p.slack_value}};
    out << rec.dump() << '\n';
  }
  nlohmann::json summary{{"record", "summary"},
                         {"status", std::string(lp::to_string(report.status))},
                         {"objective", report.objective},
                         {"iterations", report.iterations},
                         {"n_constraints", report.n_constraints},
                         {"n_margin", report.n_margin},
                         {"n_distance", report.n_distance},
                         {"n_excluded_rows", report.n_excluded_rows},
                         {"n_violated_margins", report.n_violated_margins},
                         {"wall_seconds", report.wall_seconds}};
  out << summary.dump() << '\n';
}

inline void write_report_file(const TrainingReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_report_jsonl(report, out);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace kbpot::training
