#pragma once

// Command-line surface: train / eval / gen / score. Every artifact-producing
// run writes a manifest recording the command line, resolved configuration,
// input content hashes, seed, tool version, and wall time.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 solver error.
// Errors are emitted to stderr as one JSON object per failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kbpot/evaluation.hpp"
#include "kbpot/log.hpp"
#include "kbpot/lp.hpp"
#include "kbpot/manifest.hpp"
#include "kbpot/pdbio.hpp"
#include "kbpot/potential.hpp"
#include "kbpot/synthgen.hpp"
#include "kbpot/training.hpp"
#include "kbpot/types.hpp"

namespace kbpot::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

namespace fs = std::filesystem;

inline void print_error(std::string_view type, std::string_view message) {
  const nlohmann::json err{{"type", std::string(type)}, {"error", std::string(message)}};
  std::cerr << err.dump() << '\n';
}

inline std::string join_command(int argc, const char* const* argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) out += ' ';
    out += argv[i];
  }
  return out;
}

/// "data/" -> "data.manifest.json" (next to, never inside, the tree).
inline fs::path sibling_manifest_path(fs::path p) {
  while (p.filename().empty() && p.has_parent_path()) p = p.parent_path();
  return fs::path(p.string() + ".manifest.json");
}

struct StructureFlags {
  std::string chain;  // empty = first chain encountered / id-derived
  bool skip_unknown_residues = false;
  bool map_modified_residues = false;

  pdbio::ParseOptions parse_options() const {
    pdbio::ParseOptions opts;
    if (!chain.empty()) {
      if (chain.size() != 1) throw Error("--chain expects a single character");
      opts.chain = chain[0];
    }
    opts.skip_unknown_residues = skip_unknown_residues;
    opts.map_modified_residues = map_modified_residues;
    return opts;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--chain", chain, "Read only this chain (default: first encountered)");
    cmd->add_flag("--skip-unknown-residues", skip_unknown_residues,
                  "Skip non-canonical residues instead of failing");
    cmd->add_flag("--map-modified-residues", map_modified_residues,
                  "Map modified residues (MSE -> MET) instead of failing");
  }
};

/// Loads a dataset root (directory layout) or a manifest file listing
/// native/decoy paths, surfacing per-decoy drop warnings through the logger.
inline std::vector<DecoyEnsemble> load_data(const fs::path& data, const StructureFlags& flags) {
  const pdbio::ParseOptions opts = flags.parse_options();
  std::vector<std::string> warnings;
  std::vector<DecoyEnsemble> ensembles;
  if (fs::is_directory(data)) {
    ensembles = pdbio::load_dataset(data, opts, &warnings);
  } else {
    ensembles = pdbio::load_manifest(data, opts, &warnings);
  }
  for (const auto& w : warnings) log::warn("data", w);
  return ensembles;
}

struct TrainArgs {
  std::string data;
  std::string out = "params.kbp";
  std::string scheme = "lpkp1";
  double epsilon = 0.01;
  double x_bound = 4.0;
  std::size_t decoys_per_protein = 45;
  std::string slack = "per-protein";
  int min_separation = 1;
  double alpha = 1.0;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  long max_lp_iters = -1;
  bool paper_literal_sign = false;
  bool no_recompute_rmsd = false;
  std::string dump_lp;
  std::string report_path;    // default: <out>.report.jsonl
  std::string manifest_path;  // default: <out>.manifest.json
  StructureFlags structure;
};

inline int run_train(const TrainArgs& args, const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ensembles = load_data(args.data, args.structure);

  training::TrainingConfig config;
  config.scheme = training::scheme_from_string(args.scheme);
  config.epsilon = args.epsilon;
  config.x_bound = args.x_bound;
  config.decoys_per_protein = args.decoys_per_protein;
  if (args.slack == "per-protein") {
    config.slack_granularity = training::SlackGranularity::PerProtein;
  } else if (args.slack == "per-decoy") {
    config.slack_granularity = training::SlackGranularity::PerDecoy;
  } else {
    throw Error("--slack expects per-protein or per-decoy, got '" + args.slack + "'");
  }
  config.min_separation = args.min_separation;
  config.rng_seed = args.seed;
  config.alpha = args.alpha;
  config.paper_literal_slack_sign = args.paper_literal_sign;
  config.recompute_rmsd = !args.no_recompute_rmsd;
  config.solve_options.max_iters = args.max_lp_iters;

  const unsigned threads = parallel::resolve_threads(args.threads);
  training::BuiltLp built;
  training::BuiltLp* built_ptr = args.dump_lp.empty() ? nullptr : &built;
  auto dump = [&] {
    if (!built_ptr || built.instance.n_vars == 0) return;
    std::ofstream out(args.dump_lp);
    if (!out) throw Error("cannot open '" + args.dump_lp + "' for writing");
    lp::write_mps(built.instance, out, "KBPOT");
    log::info("cli", "lp written to " + args.dump_lp);
  };

  training::TrainResult result;
  try {
    result = training::train(ensembles, config, threads, built_ptr);
  } catch (...) {
    dump();  // the assembled LP is still worth keeping when the solve fails
    throw;
  }
  dump();

  potential::write_params_file(result.params, args.out);
  const std::string report_path =
      args.report_path.empty() ? args.out + ".report.jsonl" : args.report_path;
  training::write_report_file(result.report, report_path);

  manifest::RunManifest mani;
  mani.command = command;
  mani.config = nlohmann::json{{"subcommand", "train"},
                               {"data", args.data},
                               {"out", args.out},
                               {"scheme", std::string(training::to_string(config.scheme))},
                               {"epsilon", config.epsilon},
                               {"x_bound", config.x_bound},
                               {"decoys_per_protein", config.decoys_per_protein},
                               {"slack", args.slack},
                               {"min_separation", config.min_separation},
                               {"alpha", config.alpha},
                               {"paper_literal_sign", config.paper_literal_slack_sign},
                               {"recompute_rmsd", config.recompute_rmsd},
                               {"max_lp_iters", config.solve_options.max_iters},
                               {"threads", threads},
                               {"chain", args.structure.chain},
                               {"skip_unknown_residues", args.structure.skip_unknown_residues},
                               {"map_modified_residues", args.structure.map_modified_residues}};
  mani.inputs[args.data] = manifest::hash_input(args.data);
  mani.seed = args.seed;
  mani.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  mani.write(args.manifest_path.empty() ? fs::path(args.out + ".manifest.json")
                                        : fs::path(args.manifest_path));

  const auto& rep = result.report;
  std::printf("trained %s on %zu proteins: objective %.12g, %zu constraints (%zu margin, %zu distance), %zu violated margins, %zu excluded rows, %ld iterations\n",
              std::string(training::to_string(config.scheme)).c_str(), rep.proteins.size(),
              rep.objective, rep.n_constraints, rep.n_margin, rep.n_distance,
              rep.n_violated_margins, rep.n_excluded_rows, rep.iterations);
  std::printf("params written to %s\n", args.out.c_str());
  return kExitOk;
}

struct EvalArgs {
  std::string data;
  std::string params;
  std::string out_dir;
  unsigned threads = 0;
  bool no_recompute_rmsd = false;
  std::string manifest_path;  // default: <out-dir>/manifest.json
  StructureFlags structure;
};

inline int run_eval(const EvalArgs& args, const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto params = potential::read_params_file(args.params);
  const auto ensembles = load_data(args.data, args.structure);
  const unsigned threads = parallel::resolve_threads(args.threads);
  const auto result =
      evaluation::evaluate_set(ensembles, params, threads, !args.no_recompute_rmsd);
  evaluation::write_eval_outputs(result, args.out_dir);

  manifest::RunManifest mani;
  mani.command = command;
  mani.config = nlohmann::json{{"subcommand", "eval"},
                               {"data", args.data},
                               {"params", args.params},
                               {"out_dir", args.out_dir},
                               {"recompute_rmsd", !args.no_recompute_rmsd},
                               {"threads", threads},
                               {"chain", args.structure.chain},
                               {"skip_unknown_residues", args.structure.skip_unknown_residues},
                               {"map_modified_residues", args.structure.map_modified_residues}};
  mani.inputs[args.data] = manifest::hash_input(args.data);
  mani.inputs[args.params] = manifest::hash_input(args.params);
  mani.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  mani.write(args.manifest_path.empty() ? fs::path(args.out_dir) / "manifest.json"
                                        : fs::path(args.manifest_path));

  const auto& s = result.summary;
  std::printf("n_proteins %zu\n", s.n_proteins);
  std::printf("n_firsts %zu\n", s.n_firsts);
  std::printf("average_rank %.12g\n", s.average_rank);
  std::printf("average_best_decoy_rmsd %.12g\n", s.average_best_decoy_rmsd);
  std::printf("outputs written to %s\n", args.out_dir.c_str());
  return kExitOk;
}

struct GenArgs {
  std::string out;
  std::size_t n_proteins = 30;
  std::size_t residues_per_protein = 40;
  std::size_t decoys_per_protein = 40;
  std::vector<double> sigmas = {0.5, 1.0, 2.0, 4.0};
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string manifest_path;  // default: sibling of the dataset root
};

inline int run_gen(const GenArgs& args, const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  synthgen::SynthConfig config;
  config.n_proteins = args.n_proteins;
  config.residues_per_protein = args.residues_per_protein;
  config.decoys_per_protein = args.decoys_per_protein;
  config.perturbation_sigmas = args.sigmas;
  config.rng_seed = args.seed;
  const unsigned threads = parallel::resolve_threads(args.threads);
  const auto ensembles = synthgen::generate(config, threads);
  synthgen::write_dataset(ensembles, args.out);

  manifest::RunManifest mani;
  mani.command = command;
  mani.config = nlohmann::json{{"subcommand", "gen"},
                               {"out", args.out},
                               {"n_proteins", config.n_proteins},
                               {"residues_per_protein", config.residues_per_protein},
                               {"decoys_per_protein", config.decoys_per_protein},
                               {"sigmas", config.perturbation_sigmas},
                               {"threads", threads}};
  mani.seed = args.seed;
  mani.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  mani.write(args.manifest_path.empty() ? sibling_manifest_path(args.out)
                                        : fs::path(args.manifest_path));

  std::printf("generated %zu proteins x %zu decoys at %s\n", config.n_proteins,
              config.decoys_per_protein, args.out.c_str());
  return kExitOk;
}

struct ScoreArgs {
  std::string params;
  std::string structure_path;
  std::string manifest_path;  // empty: no manifest (stdout is the product)
  StructureFlags structure;
};

inline int run_score(const ScoreArgs& args, const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto params = potential::read_params_file(args.params);
  const auto trace = pdbio::load_structure(args.structure_path, args.structure.parse_options());
  const double e = potential::energy(trace, params);
  std::printf("%.12f\n", e);

  if (!args.manifest_path.empty()) {
    manifest::RunManifest mani;
    mani.command = command;
    mani.config = nlohmann::json{{"subcommand", "score"},
                                 {"params", args.params},
                                 {"structure", args.structure_path},
                                 {"chain", args.structure.chain}};
    mani.inputs[args.params] = manifest::hash_input(args.params);
    mani.inputs[args.structure_path] = manifest::hash_input(args.structure_path);
    mani.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    mani.write(args.manifest_path);
  }
  return kExitOk;
}

inline int kbpot_main(int argc, const char* const* argv) {
  CLI::App app{"kbpot: distance-dependent Ca potential trainer and evaluator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "Read options from a key=value config file (sections per subcommand)");
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a potential on a decoy dataset");
  train->add_option("--data", train_args.data, "Dataset root directory or manifest file")
      ->required();
  train->add_option("--out", train_args.out, "Output parameter file");
  train->add_option("--scheme", train_args.scheme, "Training scheme: lpkp1 or lpkp2");
  train->add_option("--epsilon", train_args.epsilon, "Native/decoy energy margin");
  train->add_option("--x-bound", train_args.x_bound, "Box bound on every weight");
  train->add_option("--decoys-per-protein", train_args.decoys_per_protein,
                    "Decoys kept per protein (stratified over the RMSD range)");
  train->add_option("--slack", train_args.slack, "Slack granularity: per-protein or per-decoy");
  train->add_option("--min-separation", train_args.min_separation,
                    "Minimum sequence separation |i-j| for residue pairs");
  train->add_option("--alpha", train_args.alpha, "Distance-row scale (lpkp2)");
  train->add_option("--seed", train_args.seed, "Root RNG seed");
  train->add_option("--threads", train_args.threads, "Worker threads (0 = hardware)");
  train->add_option("--max-lp-iters", train_args.max_lp_iters,
                    "Simplex iteration cap (-1 = automatic)");
  train->add_flag("--paper-literal-sign", train_args.paper_literal_sign,
                  "Subtract the slack in margin rows instead of adding it");
  train->add_flag("--no-recompute-rmsd", train_args.no_recompute_rmsd,
                  "Use bundled rmsd.csv tables where present");
  train->add_option("--dump-lp", train_args.dump_lp, "Write the assembled LP in MPS format");
  train->add_option("--report", train_args.report_path,
                    "Training report path (default: <out>.report.jsonl)");
  train->add_option("--manifest", train_args.manifest_path,
                    "Run manifest path (default: <out>.manifest.json)");
  train_args.structure.attach(train);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a potential on a decoy dataset");
  eval->add_option("--data", eval_args.data, "Dataset root directory or manifest file")->required();
  eval->add_option("--params", eval_args.params, "Trained parameter file")->required();
  eval->add_option("--out-dir", eval_args.out_dir, "Directory for CSV outputs")->required();
  eval->add_option("--threads", eval_args.threads, "Worker threads (0 = hardware)");
  eval->add_flag("--no-recompute-rmsd", eval_args.no_recompute_rmsd,
                 "Use bundled rmsd.csv tables where present");
  eval->add_option("--manifest", eval_args.manifest_path,
                   "Run manifest path (default: <out-dir>/manifest.json)");
  eval_args.structure.attach(eval);

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic native/decoy dataset");
  gen->add_option("--out", gen_args.out, "Dataset root directory to create")->required();
  gen->add_option("--n-proteins", gen_args.n_proteins, "Number of proteins");
  gen->add_option("--residues-per-protein", gen_args.residues_per_protein, "Chain length");
  gen->add_option("--decoys-per-protein", gen_args.decoys_per_protein, "Decoys per protein");
  gen->add_option("--sigmas", gen_args.sigmas, "Perturbation scales in Angstrom")
      ->delimiter(',');
  gen->add_option("--seed", gen_args.seed, "Root RNG seed");
  gen->add_option("--threads", gen_args.threads, "Worker threads (0 = hardware)");
  gen->add_option("--manifest", gen_args.manifest_path,
                  "Run manifest path (default: next to the dataset root)");

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Print the energy of one structure");
  score->add_option("--params", score_args.params, "Trained parameter file")->required();
  score->add_option("structure", score_args.structure_path, "Structure file to score")->required();
  score->add_option("--manifest", score_args.manifest_path, "Run manifest path (off by default)");
  score_args.structure.attach(score);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    print_error("usage", e.what());
    return kExitUsage;
  }

  const std::string command = join_command(argc, argv);
  try {
    if (app.got_subcommand(train)) return run_train(train_args, command);
    if (app.got_subcommand(eval)) return run_eval(eval_args, command);
    if (app.got_subcommand(gen)) return run_gen(gen_args, command);
    if (app.got_subcommand(score)) return run_score(score_args, command);
    print_error("usage", "no subcommand given");
    return kExitUsage;
  } catch (const training::SolverFailure& e) {
    print_error("solver", e.what());
    return kExitSolver;
  } catch (const lp::MalformedInstance& e) {
    print_error("solver", e.what());
    return kExitSolver;
  } catch (const Error& e) {
    print_error("data", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitData;
  }
}

}  // namespace kbpot::cli
