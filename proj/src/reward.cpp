#include "cfdta/reward.hpp"

#include <cmath>

#include "cfdta/error.hpp"

namespace cfdta {

namespace {

double sign_of(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

}  // namespace

double delta_affinity(const AffinityOracle& F, const MolGraph& d, const ProteinSeq& p,
                      const MolGraph& d2, const ProteinSeq& p2) {
  return std::abs(F.predict(d2, p2) - F.predict(d, p));
}

double delta_joint_from(const OracleQuad& q) {
  return std::abs(q.f_joint - q.f_ref) - std::abs(q.f_drug_edit - q.f_ref) -
         std::abs(q.f_protein_edit - q.f_ref);
}

double delta_sjoint_from(const OracleQuad& q, SignScope scope) {
  const double s = sign_of(q.f_joint - q.f_ref);
  const double joint = std::abs(q.f_joint - q.f_ref);
  const double singles = std::abs(q.f_drug_edit - q.f_ref) + std::abs(q.f_protein_edit - q.f_ref);
  if (scope == SignScope::first_term) return -s * joint - singles;
  return -s * (joint - singles);
}

OracleQuad evaluate_quad(const AffinityOracle& F, const MolGraph& d, const ProteinSeq& p,
                         const MolGraph& d2, const ProteinSeq& p2) {
  return evaluate_quad(F, d, p, d2, p2, F.predict(d, p));
}

OracleQuad evaluate_quad(const AffinityOracle& F, const MolGraph& d, const ProteinSeq& p,
                         const MolGraph& d2, const ProteinSeq& p2, double f_ref) {
  OracleQuad q;
  q.f_ref = f_ref;
  q.f_drug_edit = F.predict(d2, p);
  q.f_protein_edit = F.predict(d, p2);
  q.f_joint = F.predict(d2, p2);
  return q;
}

double delta_joint(const AffinityOracle& F, const MolGraph& d, const ProteinSeq& p,
                   const MolGraph& d2, const ProteinSeq& p2) {
  return delta_joint_from(evaluate_quad(F, d, p, d2, p2));
}

double delta_sjoint(const AffinityOracle& F, const MolGraph& d, const ProteinSeq& p,
                    const MolGraph& d2, const ProteinSeq& p2, SignScope scope) {
  return delta_sjoint_from(evaluate_quad(F, d, p, d2, p2), scope);
}

RewardBreakdown breakdown_from(const OracleQuad& q, double sim_drug, double sim_protein,
                               const RewardWeights& w, SignScope scope) {
  if (w.alpha_r < 0.0 || w.alpha_d < 0.0 || w.alpha_p < 0.0) {
    throw ConfigError("reward weights must be non-negative");
  }
  RewardBreakdown b;
  b.delta_total = std::abs(q.f_joint - q.f_ref);
  b.delta_joint = delta_joint_from(q);
  b.delta_sjoint = delta_sjoint_from(q, scope);
  b.sim_drug = sim_drug;
  b.sim_protein = sim_protein;
  // Term order is part of the contract: identical inputs must recompose to
  // the identical floating-point reward on audit.
  b.reward = w.alpha_r * b.delta_sjoint + w.alpha_p * b.sim_protein + w.alpha_d * b.sim_drug;
  return b;
}

RewardBreakdown total_reward(const RewardWeights& w, const AffinityOracle& F, const MolGraph& d,
                             const ProteinSeq& p, const MolGraph& d2, const ProteinSeq& p2,
                             SignScope scope) {
  const OracleQuad q = evaluate_quad(F, d, p, d2, p2);
  const double sim_d = cosine_similarity(F.encode_drug(d), F.encode_drug(d2));
  const double sim_p = cosine_similarity(F.encode_protein(p), F.encode_protein(p2));
  return breakdown_from(q, sim_d, sim_p, w, scope);
}

}  // namespace cfdta
