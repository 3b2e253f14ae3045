#pragma once

// Structure I/O. Reads Ca atoms from fixed-column PDB-style ATOM records
// (first model only, altLoc blank or 'A', one chain), assembles decoy
// ensembles from a directory layout or a manifest file, and provides an
// exact-round-trip internal trace format plus a minimal PDB writer.
//
// Fixed columns used (1-based, PDB v3.3): record name 1-6, atom name 13-16,
// altLoc 17, resName 18-20, chainID 22, resSeq 23-26, iCode 27, x 31-38,
// y 39-46, z 47-54.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kbpot/textutil.hpp"
#include "kbpot/types.hpp"

namespace kbpot::pdbio {

namespace fs = std::filesystem;

/// An ATOM record whose fixed fields cannot be parsed.
struct MalformedRecord : Error {
  using Error::Error;
};

/// No usable Ca atoms in the input.
struct NoCaAtoms : Error {
  using Error::Error;
};

/// An ensemble whose decoys were all rejected.
struct EmptyEnsemble : Error {
  using Error::Error;
};

struct ParseOptions {
  /// Chain to read; unset means the chain of the first accepted Ca record.
  std::optional<char> chain;
  /// Skip residues with non-canonical codes instead of failing.
  bool skip_unknown_residues = false;
  /// Apply the modified-residue alias table (MSE -> MET) and accept HETATM
  /// records for aliased residues.
  bool map_modified_residues = false;
};

inline const std::vector<std::pair<std::string_view, std::string_view>>& residue_aliases() {
  static const std::vector<std::pair<std::string_view, std::string_view>> table = {
      {"MSE", "MET"},
  };
  return table;
}

inline std::optional<std::string_view> alias_residue(std::string_view code) {
  for (const auto& [from, to] : residue_aliases()) {
    if (from == code) return to;
  }
  return std::nullopt;
}

/// Parses the Ca trace of one structure from PDB text. Residues are ordered
/// by (residue sequence number, insertion code); for duplicate residue keys
/// the first record wins. The id is taken from a HEADER record when present.
inline CaTrace parse_structure(std::string_view pdb_text, const ParseOptions& options = {}) {
  struct Entry {
    int res_seq;
    char i_code;
    Residue residue;
  };
  std::vector<Entry> entries;
  std::optional<char> chain = options.chain;
  std::string header_id;
  int models_seen = 0;
  bool stop = false;

  text::for_each_line(pdb_text, [&](std::size_t line_no, std::string_view line) {
    if (stop) return;
    const std::string_view record = line.substr(0, std::min<std::size_t>(6, line.size()));
    if (record.substr(0, 5) == "MODEL") {
      if (++models_seen > 1) stop = true;
      return;
    }
    if (record.substr(0, 6) == "ENDMDL") {
      stop = true;
      return;
    }
    if (record.substr(0, 6) == "HEADER") {
      if (line.size() >= 66) header_id = std::string(text::trim(line.substr(62, 4)));
      return;
    }
    const bool is_atom = record == "ATOM  ";
    const bool is_het = record == "HETATM";
    if (!is_atom && !is_het) return;
    if (line.size() < 54) {
      throw MalformedRecord("line " + std::to_string(line_no) + ": ATOM record too short");
    }
    const std::string_view atom_name = text::trim(line.substr(12, 4));
    if (atom_name != "CA") return;
    const char alt_loc = line[16];
    if (alt_loc != ' ' && alt_loc != 'A') return;
    std::string res_name(text::trim(line.substr(17, 3)));
    if (is_het) {
      // HETATM is only meaningful here for aliased residues (e.g. MSE).
      if (!options.map_modified_residues || !alias_residue(res_name)) return;
    }
    if (options.map_modified_residues) {
      if (const auto mapped = alias_residue(res_name)) res_name = std::string(*mapped);
    }
    const char chain_id = line.size() > 21 ? line[21] : ' ';
    if (chain && chain_id != *chain) return;
    const auto res_seq = text::parse_long(line.substr(22, 4));
    if (!res_seq) {
      throw MalformedRecord("line " + std::to_string(line_no) + ": unparsable residue number '" +
                            std::string(text::trim(line.substr(22, 4))) + "'");
    }
    const char i_code = line.size() > 26 ? line[26] : ' ';
    const auto x = text::parse_double(line.substr(30, 8));
    const auto y = text::parse_double(line.substr(38, 8));
    const auto z = text::parse_double(line.substr(46, 8));
    if (!x || !y || !z) {
      const char* which = !x ? "x" : (!y ? "y" : "z");
      const std::size_t off = !x ? 30 : (!y ? 38 : 46);
      throw MalformedRecord("line " + std::to_string(line_no) + ": unparsable " + which +
                            " coordinate '" + std::string(text::trim(line.substr(off, 8))) + "'");
    }
    const auto aa = amino_from_code3(res_name);
    if (!aa) {
      if (options.skip_unknown_residues) return;
      throw UnknownResidue("line " + std::to_string(line_no) + ": non-canonical residue '" +
                           res_name + "'");
    }
    if (!chain) chain = chain_id;  // lock onto the first chain encountered
    for (const auto& e : entries) {
      if (e.res_seq == static_cast<int>(*res_seq) && e.i_code == i_code) return;  // first wins
    }
    entries.push_back(Entry{static_cast<int>(*res_seq), i_code, Residue{*aa, {*x, *y, *z}}});
  });

  if (entries.empty()) throw NoCaAtoms("no Ca atoms found" + (chain ? std::string(" on chain '") + *chain + "'" : std::string()));
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.res_seq != b.res_seq) return a.res_seq < b.res_seq;
    return a.i_code < b.i_code;
  });
  CaTrace trace;
  trace.id = header_id;
  trace.residues.reserve(entries.size());
  for (const auto& e : entries) trace.residues.push_back(e.residue);
  trace.validate();
  return trace;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

/// Loads one structure from disk; the trace id is the file stem.
inline CaTrace load_structure(const fs::path& path, const ParseOptions& options = {}) {
  try {
    CaTrace trace = parse_structure(read_file(path), options);
    trace.id = path.stem().string();
    return trace;
  } catch (const MalformedRecord& e) {
    throw MalformedRecord(path.string() + ": " + e.what());
  } catch (const NoCaAtoms& e) {
    throw NoCaAtoms(path.string() + ": " + e.what());
  } catch (const UnknownResidue& e) {
    throw UnknownResidue(path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

/// Assembles an ensemble: decoys that fail to parse or do not match the
/// native's length and sequence are dropped with a warning; if none survive,
/// EmptyEnsemble is thrown.
inline DecoyEnsemble load_ensemble(const fs::path& native_path,
                                   const std::vector<fs::path>& decoy_paths,
                                   const ParseOptions& options = {},
                                   std::vector<std::string>* warnings = nullptr,
                                   std::string protein_id = {}) {
  DecoyEnsemble ens;
  ens.native = load_structure(native_path, options);
  if (protein_id.empty()) {
    protein_id = native_path.filename() == "native.pdb" ? native_path.parent_path().filename().string()
                                                        : native_path.stem().string();
  }
  ens.protein_id = protein_id;
  ens.native.id = protein_id;
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };
  for (const auto& path : decoy_paths) {
    try {
      CaTrace trace = load_structure(path, options);
      if (trace.size() != ens.native.size()) {
        warn("protein '" + protein_id + "': decoy '" + trace.id + "' dropped (length " +
             std::to_string(trace.size()) + " vs native " + std::to_string(ens.native.size()) + ")");
        continue;
      }
      if (!same_sequence(ens.native, trace)) {
        warn("protein '" + protein_id + "': decoy '" + trace.id + "' dropped (sequence mismatch)");
        continue;
      }
      ens.decoys.push_back(Decoy{trace.id, std::move(trace)});
    } catch (const Error& e) {
      warn("protein '" + protein_id + "': decoy '" + path.string() + "' dropped (" + e.what() + ")");
    }
  }
  if (ens.decoys.empty()) {
    throw EmptyEnsemble("protein '" + protein_id + "': no usable decoys");
  }
  return ens;
}

/// Chain letter embedded in dataset ids like "1em9A" (4-character PDB code
/// plus chain); '-' or '_' in fifth position means no chain filter.
inline std::optional<char> chain_from_protein_id(std::string_view id) {
  if (id.size() != 5) return std::nullopt;
  if (!(id[0] >= '0' && id[0] <= '9')) return std::nullopt;
  const char c = id[4];
  if (c == '-' || c == '_') return std::nullopt;
  return c;
}

/// Reads optional externally supplied decoy RMSDs: lines "decoy_id,rmsd".
inline std::vector<std::pair<std::string, double>> read_rmsd_table(const fs::path& path) {
  std::vector<std::pair<std::string, double>> table;
  const std::string content = read_file(path);
  text::for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    const std::string_view stripped = text::trim(line);
    if (stripped.empty() || stripped.front() == '#') return;
    const auto fields = text::split(stripped, ',');
    if (fields.size() != 2) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected 'decoy_id,rmsd'");
    }
    const auto value = text::parse_double(fields[1]);
    if (!value) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": unparsable rmsd");
    }
    table.emplace_back(std::string(text::trim(fields[0])), *value);
  });
  return table;
}

/// Loads every protein directory under `root`: <root>/<id>/native.pdb plus
/// <root>/<id>/decoys/*.pdb, directories in name order, decoys in file-name
/// order. A protein whose ensemble is empty is skipped with a warning. When
/// `chain_from_ids` is set and the caller gave no explicit chain, ids like
/// "1em9A" select their trailing chain letter.
inline std::vector<DecoyEnsemble> load_dataset(const fs::path& root,
                                               const ParseOptions& options = {},
                                               std::vector<std::string>* warnings = nullptr,
                                               bool chain_from_ids = true) {
  if (!fs::is_directory(root)) throw Error("dataset root '" + root.string() + "' is not a directory");
  std::vector<fs::path> protein_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "native.pdb")) {
      protein_dirs.push_back(entry.path());
    }
  }
  std::sort(protein_dirs.begin(), protein_dirs.end());
  std::vector<DecoyEnsemble> ensembles;
  for (const auto& dir : protein_dirs) {
    const std::string id = dir.filename().string();
    std::vector<fs::path> decoys;
    const fs::path decoy_dir = dir / "decoys";
    if (fs::is_directory(decoy_dir)) {
      for (const auto& entry : fs::directory_iterator(decoy_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pdb") {
          decoys.push_back(entry.path());
        }
      }
    }
    std::sort(decoys.begin(), decoys.end());
    ParseOptions per_protein = options;
    if (!per_protein.chain && chain_from_ids) per_protein.chain = chain_from_protein_id(id);
    try {
      DecoyEnsemble ens = load_ensemble(dir / "native.pdb", decoys, per_protein, warnings, id);
      if (fs::exists(dir / "rmsd.csv")) ens.precomputed_rmsd = read_rmsd_table(dir / "rmsd.csv");
      ensembles.push_back(std::move(ens));
    } catch (const Error& e) {
      if (warnings) warnings->push_back("protein '" + id + "' skipped: " + e.what());
    }
  }
  if (ensembles.empty()) {
    throw EmptyEnsemble("dataset '" + root.string() + "' contains no usable protein directories");
  }
  return ensembles;
}

/// Loads ensembles described by a manifest file with lines
/// "protein_id, role, path" (role is native or decoy; paths are relative to
/// the manifest's directory). Proteins appear in first-mention order.
inline std::vector<DecoyEnsemble> load_manifest(const fs::path& manifest_path,
                                                const ParseOptions& options = {},
                                                std::vector<std::string>* warnings = nullptr,
                                                bool chain_from_ids = true) {
  struct Group {
    std::optional<fs::path> native;
    std::vector<fs::path> decoys;
  };
  const fs::path base = manifest_path.parent_path();
  std::vector<std::string> order;
  std::map<std::string, Group> groups;
  const std::string content = read_file(manifest_path);
  text::for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    const std::string_view stripped = text::trim(line);
    if (stripped.empty() || stripped.front() == '#') return;
    const auto fields = text::split(stripped, ',');
    if (fields.size() != 3) {
      throw Error(manifest_path.string() + ":" + std::to_string(line_no) +
                  ": expected 'protein_id, role, path'");
    }
    const std::string id(text::trim(fields[0]));
    const std::string role(text::trim(fields[1]));
    fs::path path(std::string(text::trim(fields[2])));
    if (path.is_relative()) path = base / path;
    if (groups.find(id) == groups.end()) order.push_back(id);
    Group& g = groups[id];
    if (role == "native") {
      if (g.native) {
        throw Error(manifest_path.string() + ":" + std::to_string(line_no) +
                    ": duplicate native for '" + id + "'");
      }
      g.native = path;
    } else if (role == "decoy") {
      g.decoys.push_back(path);
    } else {
      throw Error(manifest_path.string() + ":" + std::to_string(line_no) + ": unknown role '" +
                  role + "'");
    }
  });
  std::vector<DecoyEnsemble> ensembles;
  for (const auto& id : order) {
    const Group& g = groups[id];
    if (!g.native) {
      throw Error("manifest '" + manifest_path.string() + "': protein '" + id + "' has no native");
    }
    ParseOptions per_protein = options;
    if (!per_protein.chain && chain_from_ids) per_protein.chain = chain_from_protein_id(id);
    try {
      ensembles.push_back(load_ensemble(*g.native, g.decoys, per_protein, warnings, id));
    } catch (const Error& e) {
      if (warnings) warnings->push_back("protein '" + id + "' skipped: " + e.what());
    }
  }
  if (ensembles.empty()) {
    throw EmptyEnsemble("manifest '" + manifest_path.string() + "' yielded no usable ensembles");
  }
  return ensembles;
}

// ---------------------------------------------------------------------------
// Internal trace format: exact text round trip (17 significant digits).
//   kbpot-trace v1 <id>
//   <residue count>
//   <AA3> <x> <y> <z>   (one line per residue)
// ---------------------------------------------------------------------------

inline std::string serialize_trace(const CaTrace& trace) {
  std::string out = "kbpot-trace v1 " + trace.id + "\n" + std::to_string(trace.size()) + "\n";
  for (const auto& r : trace.residues) {
    out += std::string(to_code3(r.type)) + " " + text::format_g17(r.pos.x) + " " +
           text::format_g17(r.pos.y) + " " + text::format_g17(r.pos.z) + "\n";
  }
  return out;
}

inline CaTrace parse_trace(std::string_view text_in) {
  CaTrace trace;
  std::size_t expected = 0;
  int stage = 0;
  text::for_each_line(text_in, [&](std::size_t line_no, std::string_view line) {
    if (stage == 0) {
      constexpr std::string_view magic = "kbpot-trace v1";
      if (line.substr(0, magic.size()) != magic) {
        throw Error("trace line 1: bad header");
      }
      std::string_view rest = line.substr(magic.size());
      if (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      trace.id = std::string(rest);
      stage = 1;
      return;
    }
    if (stage == 1) {
      const auto n = text::parse_long(line);
      if (!n || *n < 0) throw Error("trace line 2: bad residue count");
      expected = static_cast<std::size_t>(*n);
      trace.residues.reserve(expected);
      stage = 2;
      return;
    }
    const auto tok = text::split_ws(line);
    if (tok.empty()) return;
    if (tok.size() != 4) throw Error("trace line " + std::to_string(line_no) + ": expected 4 fields");
    const auto x = text::parse_double(tok[1]);
    const auto y = text::parse_double(tok[2]);
    const auto z = text::parse_double(tok[3]);
    if (!x || !y || !z) throw Error("trace line " + std::to_string(line_no) + ": bad coordinates");
    trace.residues.push_back(Residue{require_amino(tok[0]), {*x, *y, *z}});
  });
  if (stage != 2 || trace.residues.size() != expected) {
    throw Error("trace: truncated (expected " + std::to_string(expected) + " residues, got " +
                std::to_string(trace.residues.size()) + ")");
  }
  trace.validate();
  return trace;
}

// ---------------------------------------------------------------------------
// Minimal PDB writer (Ca backbone only; chain A, residues numbered from 1).
// ---------------------------------------------------------------------------

inline void write_pdb(const CaTrace& trace, std::ostream& out) {
  char buf[96];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const Residue& r = trace.residues[i];
    std::snprintf(buf, sizeof buf,
                  "ATOM  %5d  CA  %3s A%4d    %8.3f%8.3f%8.3f  1.00  0.00           C",
                  static_cast<int>(i + 1), std::string(to_code3(r.type)).c_str(),
                  static_cast<int>(i + 1), r.pos.x, r.pos.y, r.pos.z);
    out << buf << '\n';
  }
  out << "TER\nEND\n";
}

inline void write_pdb_file(const CaTrace& trace, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_pdb(trace, out);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace kbpot::pdbio
