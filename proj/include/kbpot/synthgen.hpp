#pragma once

// Synthetic ensemble generator. Natives are self-avoiding random Ca chains
// with the consecutive-Ca distance fixed at 3.8 A (real backbone spacing, so
// the first spline bin is populated realistically) and uniformly random
// residue types; decoys add zero-mean Gaussian coordinate noise at a scale
// drawn per decoy from a configured list, so decoy RMSDs span a range.
// Generation is deterministic per seed and parallel per protein: every chain
// and every decoy has its own counter-derived RNG stream.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "kbpot/parallel.hpp"
#include "kbpot/pdbio.hpp"
#include "kbpot/rng.hpp"
#include "kbpot/types.hpp"

namespace kbpot::synthgen {

struct SynthConfig {
  std::size_t n_proteins = 30;
  std::size_t residues_per_protein = 40;
  std::size_t decoys_per_protein = 40;
  std::vector<double> perturbation_sigmas = {0.5, 1.0, 2.0, 4.0};
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (n_proteins < 1) throw Error("synth config: n_proteins must be >= 1");
    if (residues_per_protein < 2) throw Error("synth config: residues_per_protein must be >= 2");
    if (decoys_per_protein < 1) throw Error("synth config: decoys_per_protein must be >= 1");
    if (perturbation_sigmas.empty()) throw Error("synth config: perturbation_sigmas is empty");
    for (double s : perturbation_sigmas) {
      if (!(s > 0.0)) throw Error("synth config: sigmas must be > 0");
    }
  }
};

constexpr double kBondLength = 3.8;     // consecutive Ca-Ca distance (A)
constexpr double kMinSeparation = 2.2;  // self-avoidance radius (A)

/// Grows one self-avoiding chain. Each step tries fresh directions until the
/// new point clears every previous point by kMinSeparation; if a step gets
/// stuck the whole chain restarts (cheap at the lengths used here).
inline std::vector<Vec3> random_chain(std::size_t n, rng::Rng& rng) {
  constexpr int kMaxStepTries = 200;
  std::vector<Vec3> pts;
  for (;;) {
    pts.clear();
    pts.push_back({0.0, 0.0, 0.0});
    bool stuck = false;
    while (pts.size() < n && !stuck) {
      const Vec3& cur = pts.back();
      stuck = true;
      for (int attempt = 0; attempt < kMaxStepTries; ++attempt) {
        const Vec3 dir = rng.unit_vector();
        const Vec3 cand{cur.x + kBondLength * dir.x, cur.y + kBondLength * dir.y,
                        cur.z + kBondLength * dir.z};
        bool clear = true;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
          if (distance(pts[k], cand) < kMinSeparation) {
            clear = false;
            break;
          }
        }
        if (clear) {
          pts.push_back(cand);
          stuck = false;
          break;
        }
      }
    }
    if (pts.size() == n) return pts;
  }
}

inline std::string padded_index(const char* prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, index);
  return buf;
}

/// Generates protein `protein_idx` of the configured set (native + decoys).
inline DecoyEnsemble generate_protein(const SynthConfig& config, std::size_t protein_idx) {
  DecoyEnsemble ens;
  ens.protein_id = padded_index("synth", protein_idx + 1);

  rng::Rng chain_rng(rng::derive_seed(config.rng_seed, protein_idx, 0));
  ens.native.id = ens.protein_id;
  const auto pts = random_chain(config.residues_per_protein, chain_rng);
  ens.native.residues.reserve(pts.size());
  for (const Vec3& p : pts) {
    const auto type = static_cast<AminoAcid>(chain_rng.uniform_int(0, kAminoAcidCount - 1));
    ens.native.residues.push_back(Residue{type, p});
  }

  ens.decoys.reserve(config.decoys_per_protein);
  for (std::size_t d = 0; d < config.decoys_per_protein; ++d) {
    rng::Rng decoy_rng(rng::derive_seed(config.rng_seed, protein_idx, d + 1));
    const auto pick = decoy_rng.uniform_int(0, static_cast<std::int64_t>(config.perturbation_sigmas.size()) - 1);
    const double sigma = config.perturbation_sigmas[static_cast<std::size_t>(pick)];
    Decoy decoy;
    decoy.id = padded_index("d", d + 1);
    decoy.trace.id = decoy.id;
    decoy.trace.residues = ens.native.residues;
    for (Residue& r : decoy.trace.residues) {
      r.pos.x += sigma * decoy_rng.normal();
      r.pos.y += sigma * decoy_rng.normal();
      r.pos.z += sigma * decoy_rng.normal();
    }
    ens.decoys.push_back(std::move(decoy));
  }
  ens.validate();
  return ens;
}

/// The perturbation scale decoy (protein_idx, decoy_idx) was generated with;
/// recomputes the same draw generate_protein makes.
inline double decoy_sigma(const SynthConfig& config, std::size_t protein_idx, std::size_t decoy_idx) {
  rng::Rng decoy_rng(rng::derive_seed(config.rng_seed, protein_idx, decoy_idx + 1));
  const auto pick = decoy_rng.uniform_int(0, static_cast<std::int64_t>(config.perturbation_sigmas.size()) - 1);
  return config.perturbation_sigmas[static_cast<std::size_t>(pick)];
}

inline std::vector<DecoyEnsemble> generate(const SynthConfig& config, unsigned threads = 1) {
  config.validate();
  std::vector<DecoyEnsemble> ensembles(config.n_proteins);
  parallel::parallel_for(config.n_proteins, threads,
                         [&](std::size_t p) { ensembles[p] = generate_protein(config, p); });
  return ensembles;
}

/// Writes <root>/<protein_id>/native.pdb plus <root>/<protein_id>/decoys/*.pdb.
inline void write_dataset(const std::vector<DecoyEnsemble>& ensembles,
                          const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  fs::create_directories(root);
  for (const auto& ens : ensembles) {
    const fs::path dir = root / ens.protein_id;
    fs::create_directories(dir / "decoys");
    pdbio::write_pdb_file(ens.native, dir / "native.pdb");
    for (const auto& decoy : ens.decoys) {
      pdbio::write_pdb_file(decoy.trace, dir / "decoys" / (decoy.id + ".pdb"));
    }
  }
}

}  // namespace kbpot::synthgen
