#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "cfdta/error.hpp"
#include "cfdta/protein.hpp"
#include "testutil.hpp"

using namespace cfdta;

TEST_CASE("residue codes are alphabetical ranks") {
  // Independent recomputation from the alphabet string itself.
  for (int i = 0; i < int(kAminoAcids.size()); ++i) {
    CHECK(residue_code(kAminoAcids[std::size_t(i)]) == i + 1);
  }
  CHECK(residue_code('A') == 1);
  CHECK(residue_code('Y') == 20);
  CHECK_THROWS_AS(residue_code('B'), DataError);
  CHECK_THROWS_AS(residue_code('a'), DataError);
}

TEST_CASE("sequence validation") {
  CHECK(ProteinSeq("ACDY").size() == 4);
  CHECK_THROWS_AS(ProteinSeq(""), DataError);
  CHECK_THROWS_AS(ProteinSeq("ACXD"), DataError);
  CHECK_THROWS_AS(ProteinSeq("acd"), DataError);
}

TEST_CASE("encoding pins the documented layout") {
  const EncodedProtein enc = encode_protein(ProteinSeq("PFWKYY"));
  REQUIRE(enc.size() == kEncodedProteinLength);
  CHECK(enc[0] == 13);  // P
  CHECK(enc[1] == 5);   // F
  CHECK(enc[2] == 19);  // W
  CHECK(enc[3] == 9);   // K
  CHECK(enc[4] == 20);  // Y
  CHECK(enc[5] == 20);  // Y
  for (int i = 6; i < kEncodedProteinLength; ++i) CHECK(enc[i] == 0);
}

TEST_CASE("encoding truncates beyond the window") {
  std::string long_seq(1200, 'C');
  long_seq[999] = 'W';
  long_seq[1000] = 'Y';  // invisible
  const EncodedProtein enc = encode_protein(ProteinSeq(long_seq));
  REQUIRE(enc.size() == kEncodedProteinLength);
  CHECK(enc[998] == 2);
  CHECK(enc[999] == 19);
  for (int i = 0; i < kEncodedProteinLength; ++i) CHECK(enc[i] != 0);
}

TEST_CASE("alanine mutation") {
  const ProteinSeq p("PFWKYY");
  CHECK(mutate_to_alanine(p, 0).str() == "AFWKYY");
  CHECK(mutate_to_alanine(p, 1).str() == "PAWKYY");
  CHECK(p.str() == "PFWKYY");  // source untouched
  CHECK_THROWS_AS(mutate_to_alanine(p, 6), DataError);
  CHECK_THROWS_AS(mutate_to_alanine(p, -1), DataError);
  CHECK_THROWS_AS(mutate_to_alanine(ProteinSeq("AAAA"), 2), DataError);
}

TEST_CASE("mutation moves Hamming distance exactly 1 and cannot repeat") {
  DetRng rng(321);
  for (int trial = 0; trial < 100; ++trial) {
    const ProteinSeq p = testutil::random_protein(rng, 3 + rng.index(40));
    for (int i = 0; i < p.size(); ++i) {
      if (p.residue(i) == 'A') {
        CHECK_THROWS_AS(mutate_to_alanine(p, i), DataError);
        continue;
      }
      const ProteinSeq q = mutate_to_alanine(p, i);
      int diff = 0;
      for (int j = 0; j < p.size(); ++j) diff += p.residue(j) != q.residue(j) ? 1 : 0;
      CHECK(diff == 1);
      CHECK(q.residue(i) == 'A');
      CHECK_THROWS_AS(mutate_to_alanine(q, i), DataError);
    }
  }
}

TEST_CASE("encoding of a mutant differs in at most one entry") {
  DetRng rng(888);
  for (int trial = 0; trial < 50; ++trial) {
    const ProteinSeq p = testutil::random_protein(rng, 5 + rng.index(30));
    for (int i = 0; i < p.size(); ++i) {
      if (p.residue(i) == 'A') continue;
      const EncodedProtein a = encode_protein(p);
      const EncodedProtein b = encode_protein(mutate_to_alanine(p, i));
      int diff = 0;
      for (int j = 0; j < kEncodedProteinLength; ++j) diff += a[j] != b[j] ? 1 : 0;
      CHECK(diff == 1);
      CHECK(b[i] == 1);
    }
  }
}
