#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "cfdta/error.hpp"
#include "cfdta/molgraph.hpp"
#include "cfdta/oracle.hpp"
#include "cfdta/protein.hpp"
#include "cfdta/reward.hpp"
#include "cfdta/rng.hpp"
#include "cfdta/smiles.hpp"
#include "testutil.hpp"

using namespace cfdta;

namespace {

// Predictor with hand-picked outputs per (drug certificate, sequence) pair;
// lets the arithmetic be pinned without reverse-engineering a surrogate.
class TableOracle : public AffinityOracle {
 public:
  void set(const MolGraph& d, const ProteinSeq& p, double value) {
    table_[{canonical_certificate(d), p.str()}] = value;
  }

  double predict(const MolGraph& d, const ProteinSeq& p) const override {
    const auto it = table_.find({canonical_certificate(d), p.str()});
    REQUIRE(it != table_.end());
    return it->second;
  }
  Eigen::VectorXd encode_drug(const MolGraph& d) const override {
    return compute_fingerprint(d, 1, 64).to_vector();
  }
  Eigen::VectorXd encode_protein(const ProteinSeq& p) const override {
    return kmer_counts(p, 1);
  }

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
};

OracleQuad quad(double f_ref, double f_drug_edit, double f_protein_edit, double f_joint) {
  OracleQuad q;
  q.f_ref = f_ref;
  q.f_drug_edit = f_drug_edit;
  q.f_protein_edit = f_protein_edit;
  q.f_joint = f_joint;
  return q;
}

}  // namespace

TEST_CASE("weight defaults") {
  const RewardWeights w;
  CHECK(w.alpha_r == 1.0);
  CHECK(w.alpha_d == 0.05);
  CHECK(w.alpha_p == 0.01);
}

TEST_CASE("delta_affinity is the absolute shift") {
  TableOracle F;
  const MolGraph a = parse_smiles("C");
  const MolGraph b = parse_smiles("CC");
  const ProteinSeq p("ACD");
  const ProteinSeq q("AAD");
  F.set(a, p, 7.0);
  F.set(b, q, 5.0);
  CHECK(delta_affinity(F, a, p, b, q) == 2.0);
  CHECK(delta_affinity(F, b, q, a, p) == 2.0);
  CHECK(delta_affinity(F, a, p, a, p) == 0.0);
}

TEST_CASE("delta_joint and delta_sjoint pinned quads") {
  // Affinity falls by 2.0, single edits move it by 0.5 and 0.3.
  const OracleQuad down = quad(10.0, 9.5, 9.7, 8.0);
  CHECK(delta_joint_from(down) == doctest::Approx(1.2));
  CHECK(delta_sjoint_from(down) == doctest::Approx(1.2));

  // Same magnitudes, affinity rises instead.
  const OracleQuad up = quad(10.0, 9.5, 9.7, 12.0);
  CHECK(delta_joint_from(up) == doctest::Approx(1.2));
  CHECK(delta_sjoint_from(up) == doctest::Approx(-2.8));

  // No net joint change: sign(0) = 0 kills the leading term.
  const OracleQuad flat = quad(10.0, 9.5, 9.7, 10.0);
  CHECK(delta_sjoint_from(flat) == doctest::Approx(-0.8));

  const OracleQuad identity = quad(7.0, 7.0, 7.0, 7.0);
  CHECK(delta_joint_from(identity) == 0.0);
  CHECK(delta_sjoint_from(identity) == 0.0);
}

TEST_CASE("sign scope flag flips the whole sum instead of one term") {
  const OracleQuad down = quad(10.0, 9.5, 9.7, 8.0);
  const OracleQuad up = quad(10.0, 9.5, 9.7, 12.0);
  const OracleQuad flat = quad(10.0, 9.5, 9.7, 10.0);
  CHECK(delta_sjoint_from(down, SignScope::all_terms) == doctest::Approx(1.2));
  CHECK(delta_sjoint_from(up, SignScope::all_terms) == doctest::Approx(-1.2));
  CHECK(delta_sjoint_from(flat, SignScope::all_terms) == 0.0);
}

TEST_CASE("downward moves always beat upward moves of equal size") {
  // Holds for the default scope regardless of how large the single-edit
  // shifts are; the whole-sum scope loses this once delta_joint goes
  // negative, which is why first_term is the default.
  DetRng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const double ref = rng.uniform(2.0, 12.0);
    const double m = rng.uniform(1e-6, 3.0);
    const double s1 = rng.uniform(0.0, 4.0);
    const double s2 = rng.uniform(0.0, 4.0);
    const OracleQuad down = quad(ref, ref + s1, ref - s2, ref - m);
    const OracleQuad up = quad(ref, ref + s1, ref - s2, ref + m);
    CHECK(delta_sjoint_from(down) > delta_sjoint_from(up));
    CHECK(delta_sjoint_from(down) - delta_sjoint_from(up) == doctest::Approx(2.0 * m));
  }
}

TEST_CASE("breakdown recomposition is exact and ordered") {
  const RewardWeights w;
  const OracleQuad down = quad(10.0, 9.5, 9.7, 8.0);
  const RewardBreakdown b = breakdown_from(down, 0.95, 0.999, w);
  CHECK(b.delta_total == 2.0);
  CHECK(b.delta_joint == doctest::Approx(1.2));
  CHECK(b.delta_sjoint == doctest::Approx(1.2));
  CHECK(b.sim_drug == 0.95);
  CHECK(b.sim_protein == 0.999);
  CHECK(b.reward == doctest::Approx(1.25749));
  // Bit-exact recomposition in the documented term order.
  CHECK(b.reward == w.alpha_r * b.delta_sjoint + w.alpha_p * b.sim_protein + w.alpha_d * b.sim_drug);
}

TEST_CASE("breakdown recomposition holds on random quads") {
  DetRng rng(22);
  for (int trial = 0; trial < 500; ++trial) {
    const OracleQuad q = quad(rng.uniform(0.0, 15.0), rng.uniform(0.0, 15.0),
                              rng.uniform(0.0, 15.0), rng.uniform(0.0, 15.0));
    RewardWeights w;
    w.alpha_r = rng.uniform(0.0, 2.0);
    w.alpha_d = rng.uniform(0.0, 1.0);
    w.alpha_p = rng.uniform(0.0, 1.0);
    const double sd = rng.uniform(-1.0, 1.0);
    const double sp = rng.uniform(-1.0, 1.0);
    const SignScope scope = trial % 2 == 0 ? SignScope::first_term : SignScope::all_terms;
    const RewardBreakdown b = breakdown_from(q, sd, sp, w, scope);
    CHECK(b.reward == w.alpha_r * b.delta_sjoint + w.alpha_p * b.sim_protein + w.alpha_d * b.sim_drug);
    CHECK(b.delta_total == std::abs(q.f_joint - q.f_ref));
    CHECK(b.delta_joint == delta_joint_from(q));
    CHECK(b.delta_sjoint == delta_sjoint_from(q, scope));
  }
}

TEST_CASE("zero weights produce zero reward") {
  RewardWeights w;
  w.alpha_r = 0.0;
  w.alpha_d = 0.0;
  w.alpha_p = 0.0;
  DetRng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const OracleQuad q = quad(rng.uniform(0.0, 15.0), rng.uniform(0.0, 15.0),
                              rng.uniform(0.0, 15.0), rng.uniform(0.0, 15.0));
    CHECK(breakdown_from(q, rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), w).reward == 0.0);
  }
}

TEST_CASE("negative weights are rejected") {
  RewardWeights w;
  w.alpha_d = -0.05;
  CHECK_THROWS_AS(breakdown_from(quad(1, 1, 1, 1), 1.0, 1.0, w), ConfigError);
}

TEST_CASE("evaluate_quad queries all four corners") {
  TableOracle F;
  const MolGraph d = parse_smiles("C");
  const MolGraph d2 = parse_smiles("CC");
  const ProteinSeq p("ACD");
  const ProteinSeq p2("AAD");
  F.set(d, p, 7.0);
  F.set(d2, p, 7.5);
  F.set(d, p2, 6.5);
  F.set(d2, p2, 9.0);
  const OracleQuad q = evaluate_quad(F, d, p, d2, p2);
  CHECK(q.f_ref == 7.0);
  CHECK(q.f_drug_edit == 7.5);
  CHECK(q.f_protein_edit == 6.5);
  CHECK(q.f_joint == 9.0);

  // Cached-reference overload trusts its caller.
  const OracleQuad cached = evaluate_quad(F, d, p, d2, p2, 123.0);
  CHECK(cached.f_ref == 123.0);
  CHECK(cached.f_joint == 9.0);

  CHECK(delta_joint(F, d, p, d2, p2) == delta_joint_from(q));
  CHECK(delta_sjoint(F, d, p, d2, p2) == delta_sjoint_from(q));
}

TEST_CASE("identity counterfactual scores exactly the similarity payout") {
  SurrogateSpec spec;
  spec.seed = 4;
  const SurrogateOracle F(spec);
  const MolGraph d = parse_smiles("CC(=O)Nc1ccc(O)cc1");
  const ProteinSeq p("PFWKYYACD");
  const RewardWeights w;
  const RewardBreakdown b = total_reward(w, F, d, p, d, p);
  CHECK(b.delta_total == 0.0);
  CHECK(b.delta_joint == 0.0);
  CHECK(b.delta_sjoint == 0.0);
  CHECK(b.sim_drug == 1.0);
  CHECK(b.sim_protein == 1.0);
  CHECK(b.reward == w.alpha_r * 0.0 + w.alpha_p * 1.0 + w.alpha_d * 1.0);
  CHECK(b.reward == doctest::Approx(0.06));
}

TEST_CASE("total_reward composes quad, encoders, and breakdown") {
  SurrogateSpec spec;
  spec.seed = 17;
  const SurrogateOracle F(spec);
  const MolGraph d = parse_smiles("CCO");
  const ProteinSeq p("PFWKYY");
  const MolGraph d2 = parse_smiles("CCN");
  const ProteinSeq p2 = mutate_to_alanine(p, 2);
  RewardWeights w;
  w.alpha_r = 0.9;
  w.alpha_d = 0.07;
  w.alpha_p = 0.02;

  const RewardBreakdown got = total_reward(w, F, d, p, d2, p2);
  const OracleQuad q = evaluate_quad(F, d, p, d2, p2);
  const double sim_d = cosine_similarity(F.encode_drug(d), F.encode_drug(d2));
  const double sim_p = cosine_similarity(F.encode_protein(p), F.encode_protein(p2));
  const RewardBreakdown want = breakdown_from(q, sim_d, sim_p, w);
  CHECK(got.delta_total == want.delta_total);
  CHECK(got.delta_joint == want.delta_joint);
  CHECK(got.delta_sjoint == want.delta_sjoint);
  CHECK(got.sim_drug == want.sim_drug);
  CHECK(got.sim_protein == want.sim_protein);
  CHECK(got.reward == want.reward);
  CHECK(got.sim_drug < 1.0);
  CHECK(got.sim_protein < 1.0);

  CHECK_THROWS_AS(total_reward(RewardWeights{-1.0, 0.0, 0.0}, F, d, p, d2, p2), ConfigError);
}

TEST_CASE("planted redundant interaction rewards only the joint removal") {
  const MolGraph d_bit = parse_smiles("CCO");
  const MolGraph d_clear = parse_smiles("CC");
  const Fingerprint fb = compute_fingerprint(d_bit, 2, 2048);
  const Fingerprint fc = compute_fingerprint(d_clear, 2, 2048);
  int bit = -1;
  for (int b : fb.set_bits()) {
    if (!fc.test(b)) {
      bit = b;
      break;
    }
  }
  REQUIRE(bit >= 0);

  SurrogateSpec spec;
  spec.drug_weight_scale = 0.0;
  spec.protein_weight_scale = 0.0;
  Interaction it;
  it.bit = bit;
  it.window_start = 1;
  it.window_residues = "FWK";
  it.strength = 2.0;
  spec.interactions = {it};

  const ProteinSeq p("PFWKYY");
  const ProteinSeq p_broken = mutate_to_alanine(p, 2);

  spec.interactions[0].kind = Interaction::Kind::redundant;
  const SurrogateOracle red(spec);
  CHECK(delta_joint(red, d_bit, p, d_clear, p_broken) == 2.0);
  CHECK(delta_sjoint(red, d_bit, p, d_clear, p_broken) == 2.0);
  // Single-sided edits see nothing under the redundant kind.
  CHECK(delta_affinity(red, d_bit, p, d_clear, p) == 0.0);
  CHECK(delta_affinity(red, d_bit, p, d_bit, p_broken) == 0.0);

  spec.interactions[0].kind = Interaction::Kind::conjunctive;
  const SurrogateOracle con(spec);
  CHECK(delta_joint(con, d_bit, p, d_clear, p_broken) == -2.0);
  CHECK(delta_sjoint(con, d_bit, p, d_clear, p_broken) == -2.0);
  CHECK(delta_affinity(con, d_bit, p, d_clear, p) == 2.0);
  CHECK(delta_affinity(con, d_bit, p, d_bit, p_broken) == 2.0);
}
