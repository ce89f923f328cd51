#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "cfdta/error.hpp"
#include "cfdta/molgraph.hpp"
#include "cfdta/smiles.hpp"
#include "testutil.hpp"

using namespace cfdta;

namespace {

int count_kind(const MolGraph& g, BondKind k) {
  int n = 0;
  for (const Bond& b : g.bonds()) n += b.kind == k ? 1 : 0;
  return n;
}

std::size_t offset_of(const char* s) {
  try {
    parse_smiles(s);
  } catch (const ParseError& e) {
    return e.offset();
  }
  const std::string msg = std::string("expected a parse error for ") + s;
  FAIL(msg);
  return std::size_t(-1);
}

}  // namespace

TEST_CASE("ethane") {
  const MolGraph g = parse_smiles("CC");
  CHECK(g.atom_count() == 2);
  REQUIRE(g.bonds().size() == 1);
  CHECK(g.bonds()[0].kind == BondKind::single);
  CHECK(write_smiles(g) == "CC");
}

TEST_CASE("cyclopropane ring closure") {
  const MolGraph g = parse_smiles("C1CC1");
  CHECK(g.atom_count() == 3);
  CHECK(g.bonds().size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(g.degree(i) == 2);
}

TEST_CASE("benzene under the aromatic convention") {
  const MolGraph g = parse_smiles("c1ccccc1");
  CHECK(g.atom_count() == 6);
  CHECK(count_kind(g, BondKind::aromatic) == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(g.atom(i).aromatic);
    // Two ring bonds at 1.5 plus the implicit hydrogen: one valence left.
    CHECK(g.explicit_valence(i) == 3);
    CHECK(g.free_valence(i) == 1);
  }
}

TEST_CASE("benzene round-trips with aromaticity preserved") {
  const MolGraph g = parse_smiles("c1ccccc1");
  const MolGraph h = parse_smiles(write_smiles(g));
  CHECK(h.atom_count() == 6);
  CHECK(count_kind(h, BondKind::aromatic) == 6);
  CHECK(canonical_certificate(g) == canonical_certificate(h));
}

TEST_CASE("grammar coverage") {
  CHECK(parse_smiles("C(=O)O").atom_count() == 3);        // branch
  CHECK(parse_smiles("C#N").bonds()[0].kind == BondKind::triple);
  CHECK(parse_smiles("C-C").bonds()[0].kind == BondKind::single);
  CHECK(parse_smiles("[NH2]C").atom_count() == 2);        // bracket H count
  CHECK(parse_smiles("[O-]C").atom_count() == 2);         // bracket charge, dropped
  CHECK(parse_smiles("C%12CC%12").bonds().size() == 3);   // two-digit ring label
  CHECK(parse_smiles("Clc1ccccc1").atom_count() == 7);    // two-letter organic atom
  CHECK(parse_smiles("n1cccc1").atom_count() == 5);       // aromatic nitrogen (pyrrole-type)
}

TEST_CASE("rejections carry the byte offset") {
  CHECK(offset_of("C(C") >= 1);
  CHECK(offset_of("CC)") == 2);
  CHECK(offset_of("C1CC") >= 1);   // dangling ring digit
  CHECK(offset_of("C@C") == 1);
  CHECK(offset_of("C/C=C") == 1);
  CHECK(offset_of("C\\C") == 1);
  CHECK(offset_of("C*") == 1);
  CHECK(offset_of("[13C]") >= 1);  // isotope
  CHECK(offset_of("CC.CC") == 2);  // dot disconnection
  CHECK(offset_of("") == 0);
  CHECK(offset_of("C=(C)") >= 1);  // bond into a branch open
  CHECK(offset_of("C==C") >= 1);
  CHECK(offset_of("C=1CC#1") >= 1);  // ring closure order conflict
  CHECK(offset_of("Zz") == 0);

  // Valence violation: pentavalent carbon.
  CHECK_THROWS_AS(parse_smiles("C(C)(C)(C)(C)C"), ParseError);
  // Aromatic atom outside a ring.
  CHECK_THROWS_AS(parse_smiles("cC"), ParseError);
}

TEST_CASE("parser is total on byte noise") {
  DetRng rng(555);
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const int len = 1 + rng.index(12);
    for (int i = 0; i < len; ++i) s += char(32 + rng.index(95));
    try {
      parse_smiles(s);
    } catch (const ParseError&) {
      // Structured rejection is the accepted outcome.
    }
  }
}

TEST_CASE("round-trip is isomorphic on random graphs") {
  DetRng rng(31337);
  for (int trial = 0; trial < 1000; ++trial) {
    const MolGraph g = testutil::random_graph(rng, 12);
    const MolGraph h = parse_smiles(write_smiles(g));
    CHECK(canonical_certificate(g) == canonical_certificate(h));
  }
}

TEST_CASE("round-trip preserves certificates on named molecules") {
  for (const char* s : {"CC(=O)Oc1ccccc1C(=O)O",          // aspirin
                        "CC(C)Cc1ccc(cc1)C(C)C(=O)O",     // ibuprofen
                        "CC(=O)Nc1ccc(O)cc1",             // paracetamol
                        "CCOC(=O)c1ccc(N)cc1",            // benzocaine
                        "CN1CCCC1c1cccnc1",               // nicotine
                        "C1CO1", "N", "O=C=O", "C#C", "CC(C)(C)C"}) {
    const MolGraph g = parse_smiles(s);
    CHECK(canonical_certificate(parse_smiles(write_smiles(g))) == canonical_certificate(g));
  }
}
