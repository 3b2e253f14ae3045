#include <catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "kbpot/pdbio.hpp"
#include "kbpot/rng.hpp"
#include "test_util.hpp"

using namespace kbpot;
using pdbio::ParseOptions;

namespace {

std::string atom_line(int serial, const std::string& res_name, char chain, int res_seq, double x,
                      double y, double z, char alt_loc = ' ', char i_code = ' ',
                      const std::string& record = "ATOM  ", const std::string& atom = " CA ") {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-6s%5d %-4s%c%3s %c%4d%c   %8.3f%8.3f%8.3f  1.00  0.00",
                record.c_str(), serial, atom.c_str(), alt_loc, res_name.c_str(), chain, res_seq,
                i_code, x, y, z);
  return buf;
}

}  // namespace

TEST_CASE("three CA records give a trace of length 3 in file order") {
  const std::string text = atom_line(1, "ALA", 'A', 1, 1.0, 2.0, 3.0) + "\n" +
                           atom_line(2, "GLY", 'A', 2, 4.0, 5.0, 6.0) + "\n" +
                           atom_line(3, "ALA", 'A', 3, 7.0, 8.0, 9.0) + "\n";
  const CaTrace t = pdbio::parse_structure(text);
  REQUIRE(t.size() == 3);
  CHECK(t.residues[0].type == AminoAcid::ALA);
  CHECK(t.residues[1].type == AminoAcid::GLY);
  CHECK(t.residues[2].type == AminoAcid::ALA);
  CHECK(t.residues[0].pos == Vec3{1.0, 2.0, 3.0});
  CHECK(t.residues[2].pos == Vec3{7.0, 8.0, 9.0});
}

TEST_CASE("altLoc keeps blank and A, drops B") {
  const std::string text = atom_line(1, "ALA", 'A', 1, 0.0, 0.0, 0.0, 'A') + "\n" +
                           atom_line(2, "ALA", 'A', 1, 9.0, 9.0, 9.0, 'B') + "\n" +
                           atom_line(3, "GLY", 'A', 2, 3.8, 0.0, 0.0) + "\n";
  const CaTrace t = pdbio::parse_structure(text);
  REQUIRE(t.size() == 2);
  CHECK(t.residues[0].pos == Vec3{0.0, 0.0, 0.0});
}

TEST_CASE("unparsable coordinate names the line") {
  std::string bad = atom_line(1, "ALA", 'A', 1, 0.0, 0.0, 0.0);
  bad.replace(30, 8, " abc.def");
  const std::string text = atom_line(1, "GLY", 'A', 1, 1.0, 1.0, 1.0) + "\n" + bad + "\n";
  try {
    pdbio::parse_structure(text);
    FAIL("expected MalformedRecord");
  } catch (const pdbio::MalformedRecord& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("no CA atoms raises NoCaAtoms") {
  const std::string text = atom_line(1, "ALA", 'A', 1, 0, 0, 0, ' ', ' ', "ATOM  ", " N  ") + "\n";
  CHECK_THROWS_AS(pdbio::parse_structure(text), pdbio::NoCaAtoms);
  CHECK_THROWS_AS(pdbio::parse_structure(""), pdbio::NoCaAtoms);
}

TEST_CASE("unknown residue fails by default, skippable, MSE mappable") {
  const std::string text = atom_line(1, "ALA", 'A', 1, 0, 0, 0) + "\n" +
                           atom_line(2, "MSE", 'A', 2, 3.8, 0, 0) + "\n" +
                           atom_line(3, "GLY", 'A', 3, 7.6, 0, 0) + "\n";
  CHECK_THROWS_AS(pdbio::parse_structure(text), UnknownResidue);

  ParseOptions skip;
  skip.skip_unknown_residues = true;
  CHECK(pdbio::parse_structure(text, skip).size() == 2);

  ParseOptions map;
  map.map_modified_residues = true;
  const CaTrace t = pdbio::parse_structure(text, map);
  REQUIRE(t.size() == 3);
  CHECK(t.residues[1].type == AminoAcid::MET);
}

TEST_CASE("HETATM MSE accepted only under mapping") {
  const std::string text = atom_line(1, "ALA", 'A', 1, 0, 0, 0) + "\n" +
                           atom_line(2, "MSE", 'A', 2, 3.8, 0, 0, ' ', ' ', "HETATM") + "\n" +
                           atom_line(3, "GLY", 'A', 3, 7.6, 0, 0) + "\n";
  CHECK(pdbio::parse_structure(text).size() == 2);  // HETATM ignored
  ParseOptions map;
  map.map_modified_residues = true;
  const CaTrace t = pdbio::parse_structure(text, map);
  REQUIRE(t.size() == 3);
  CHECK(t.residues[1].type == AminoAcid::MET);
}

TEST_CASE("only the first model is read") {
  const std::string text = "MODEL        1\n" + atom_line(1, "ALA", 'A', 1, 0, 0, 0) + "\n" +
                           atom_line(2, "GLY", 'A', 2, 3.8, 0, 0) + "\nENDMDL\nMODEL        2\n" +
                           atom_line(3, "ALA", 'A', 1, 9, 9, 9) + "\nENDMDL\n";
  const CaTrace t = pdbio::parse_structure(text);
  REQUIRE(t.size() == 2);
  CHECK(t.residues[0].pos == Vec3{0.0, 0.0, 0.0});
}

TEST_CASE("chain selection: explicit filter and first-encountered default") {
  const std::string text = atom_line(1, "ALA", 'B', 1, 0, 0, 0) + "\n" +
                           atom_line(2, "GLY", 'B', 2, 3.8, 0, 0) + "\n" +
                           atom_line(3, "TRP", 'C', 1, 9, 9, 9) + "\n" +
                           atom_line(4, "TYR", 'C', 2, 12, 9, 9) + "\n";
  const CaTrace first = pdbio::parse_structure(text);
  REQUIRE(first.size() == 2);
  CHECK(first.residues[0].type == AminoAcid::ALA);

  ParseOptions pick_c;
  pick_c.chain = 'C';
  const CaTrace c = pdbio::parse_structure(text, pick_c);
  REQUIRE(c.size() == 2);
  CHECK(c.residues[0].type == AminoAcid::TRP);
}

TEST_CASE("residues ordered by sequence number and insertion code; first duplicate wins") {
  const std::string text = atom_line(2, "GLY", 'A', 2, 3.8, 0, 0) + "\n" +
                           atom_line(1, "ALA", 'A', 1, 0, 0, 0) + "\n" +
                           atom_line(3, "TRP", 'A', 2, 9, 9, 9, ' ', 'A') + "\n" +
                           atom_line(4, "TYR", 'A', 1, 5, 5, 5) + "\n";  // dup of resSeq 1
  const CaTrace t = pdbio::parse_structure(text);
  REQUIRE(t.size() == 3);
  CHECK(t.residues[0].type == AminoAcid::ALA);  // resSeq 1, first record wins
  CHECK(t.residues[1].type == AminoAcid::GLY);  // resSeq 2, icode ' '
  CHECK(t.residues[2].type == AminoAcid::TRP);  // resSeq 2, icode 'A'
}

TEST_CASE("parsing is deterministic") {
  rng::Rng r(42);
  const CaTrace t = testutil::random_trace(r, 25);
  std::string pdb;
  {
    std::ostringstream os;
    pdbio::write_pdb(t, os);
    pdb = os.str();
  }
  const CaTrace a = pdbio::parse_structure(pdb);
  const CaTrace b = pdbio::parse_structure(pdb);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.residues[i].type == b.residues[i].type);
    CHECK(a.residues[i].pos == b.residues[i].pos);
  }
}

TEST_CASE("internal trace format round-trips bit-for-bit") {
  rng::Rng r(7);
  CaTrace t = testutil::random_trace(r, 40, 123.456, "roundtrip id with spaces");
  const std::string text = pdbio::serialize_trace(t);
  const CaTrace back = pdbio::parse_trace(text);
  REQUIRE(back.size() == t.size());
  CHECK(back.id == t.id);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back.residues[i].type == t.residues[i].type);
    CHECK(back.residues[i].pos == t.residues[i].pos);  // exact, not approximate
  }
  CHECK(pdbio::serialize_trace(back) == text);
}

TEST_CASE("write_pdb emits fixed columns and survives a parse round trip") {
  const CaTrace t = testutil::make_trace(
      "w", {{"ALA", {1.25, -2.5, 3.125}}, {"TRP", {-4.062, 5.0, -6.5}}});
  std::ostringstream os;
  pdbio::write_pdb(t, os);
  const std::string text = os.str();
  CHECK(text.substr(0, 6) == "ATOM  ");
  CHECK(text.find("TER") != std::string::npos);
  CHECK(text.find("END") != std::string::npos);
  const CaTrace back = pdbio::parse_structure(text);
  REQUIRE(back.size() == 2);
  CHECK(back.residues[0].type == AminoAcid::ALA);
  CHECK(back.residues[1].type == AminoAcid::TRP);
  for (std::size_t i = 0; i < 2; ++i) {  // %8.3f keeps three decimals exactly
    CHECK(back.residues[i].pos == t.residues[i].pos);
  }
}

TEST_CASE("load_ensemble keeps matching decoys and drops mismatches with warnings") {
  testutil::ScratchDir dir("kbpot-ensemble");
  rng::Rng r(3);
  const CaTrace native = testutil::random_trace(r, 10, 4.0, "nat");

  auto write_structure = [&](const std::string& name, const CaTrace& t) {
    std::ofstream out(dir / name);
    pdbio::write_pdb(t, out);
    return dir / name;
  };
  const auto native_path = write_structure("native.pdb", native);

  CaTrace good = native;
  good.residues[0].pos.x += 1.0;
  CaTrace short_one = native;
  short_one.residues.pop_back();
  CaTrace wrong_seq = native;
  wrong_seq.residues[0].type = wrong_seq.residues[0].type == AminoAcid::ALA ? AminoAcid::GLY
                                                                            : AminoAcid::ALA;
  const std::vector<std::filesystem::path> decoys = {
      write_structure("d1.pdb", good),
      write_structure("d2.pdb", short_one),
      write_structure("d3.pdb", wrong_seq),
  };

  std::vector<std::string> warnings;
  const DecoyEnsemble ens = pdbio::load_ensemble(native_path, decoys, {}, &warnings);
  REQUIRE(ens.decoys.size() == 1);
  CHECK(ens.decoys[0].id == "d1");
  CHECK(warnings.size() == 2);

  const std::vector<std::filesystem::path> all_bad = {decoys[1], decoys[2]};
  CHECK_THROWS_AS(pdbio::load_ensemble(native_path, all_bad), pdbio::EmptyEnsemble);
}

TEST_CASE("load_dataset reads the directory layout and rmsd tables") {
  testutil::ScratchDir dir("kbpot-dataset");
  rng::Rng r(5);
  for (const std::string id : {"pa", "pb"}) {
    const CaTrace native = testutil::random_trace(r, 8, 4.0, id);
    std::filesystem::create_directories(dir / (id + "/decoys"));
    pdbio::write_pdb_file(native, dir / (id + "/native.pdb"));
    CaTrace decoy = native;
    decoy.residues[1].pos.y += 0.5;
    pdbio::write_pdb_file(decoy, dir / (id + "/decoys/d1.pdb"));
  }
  testutil::write_text(dir / "pa/rmsd.csv", "# decoy table\nd1,0.25\n");

  const auto ensembles = pdbio::load_dataset(dir.path());
  REQUIRE(ensembles.size() == 2);
  CHECK(ensembles[0].protein_id == "pa");
  CHECK(ensembles[1].protein_id == "pb");
  REQUIRE(ensembles[0].precomputed_rmsd.size() == 1);
  CHECK(ensembles[0].lookup_precomputed_rmsd("d1").value() == 0.25);
  CHECK_FALSE(ensembles[1].lookup_precomputed_rmsd("d1").has_value());

  testutil::ScratchDir empty("kbpot-empty");
  CHECK_THROWS_AS(pdbio::load_dataset(empty.path()), pdbio::EmptyEnsemble);
}

TEST_CASE("load_manifest reads protein_id, role, path lines") {
  testutil::ScratchDir dir("kbpot-manifest");
  rng::Rng r(9);
  const CaTrace native = testutil::random_trace(r, 6, 4.0, "mp");
  CaTrace decoy = native;
  decoy.residues[2].pos.z -= 0.75;
  pdbio::write_pdb_file(native, dir / "n.pdb");
  pdbio::write_pdb_file(decoy, dir / "d.pdb");
  testutil::write_text(dir / "set.manifest",
                       "# comment line\n"
                       "prot1, native, n.pdb\n"
                       "prot1, decoy, d.pdb\n");
  const auto ensembles = pdbio::load_manifest(dir / "set.manifest");
  REQUIRE(ensembles.size() == 1);
  CHECK(ensembles[0].protein_id == "prot1");
  CHECK(ensembles[0].decoys.size() == 1);

  testutil::write_text(dir / "bad.manifest", "prot1, widget, n.pdb\n");
  CHECK_THROWS_AS(pdbio::load_manifest(dir / "bad.manifest"), Error);
}

TEST_CASE("chain letter extraction from dataset ids") {
  CHECK(pdbio::chain_from_protein_id("1em9A") == 'A');
  CHECK(pdbio::chain_from_protein_id("2xyzB") == 'B');
  CHECK_FALSE(pdbio::chain_from_protein_id("1em9_").has_value());
  CHECK_FALSE(pdbio::chain_from_protein_id("1em9-").has_value());
  CHECK_FALSE(pdbio::chain_from_protein_id("synth0001").has_value());
  CHECK_FALSE(pdbio::chain_from_protein_id("abcdE").has_value());
}
