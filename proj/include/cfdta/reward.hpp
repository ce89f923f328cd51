#pragma once

// Counterfactual reward terms over a black-box predictor: total affinity
// shift, the mixed second difference isolating the joint contribution, its
// sign-corrected variant, and the similarity-regularized combined reward.

#include "cfdta/molgraph.hpp"
#include "cfdta/oracle.hpp"
#include "cfdta/protein.hpp"

namespace cfdta {

// Whether the sign correction multiplies only the joint term (default,
// matching the defining equation's parenthesization) or the whole sum.
enum class SignScope { first_term, all_terms };

struct RewardWeights {
  double alpha_r = 1.0;   // joint-delta term
  double alpha_d = 0.05;  // drug similarity
  double alpha_p = 0.01;  // protein similarity
};

// The four predictor evaluations every reward needs: reference pair, each
// single edit, and the joint edit. Records store the quad so any consumer
// can recompute the derived quantities without re-querying the oracle.
struct OracleQuad {
  double f_ref = 0.0;           // F(D, P)
  double f_drug_edit = 0.0;     // F(D', P)
  double f_protein_edit = 0.0;  // F(D, P')
  double f_joint = 0.0;         // F(D', P')
};

struct RewardBreakdown {
  double delta_total = 0.0;
  double delta_joint = 0.0;
  double delta_sjoint = 0.0;
  double sim_drug = 0.0;
  double sim_protein = 0.0;
  double reward = 0.0;
};

// |F(d', p') - F(d, p)|.
double delta_affinity(const AffinityOracle& F, const MolGraph& d, const ProteinSeq& p,
                      const MolGraph& d2, const ProteinSeq& p2);

double delta_joint_from(const OracleQuad& q);
double delta_sjoint_from(const OracleQuad& q, SignScope scope = SignScope::first_term);

double delta_joint(const AffinityOracle& F, const MolGraph& d, const ProteinSeq& p,
                   const MolGraph& d2, const ProteinSeq& p2);
double delta_sjoint(const AffinityOracle& F, const MolGraph& d, const ProteinSeq& p,
                    const MolGraph& d2, const ProteinSeq& p2,
                    SignScope scope = SignScope::first_term);

OracleQuad evaluate_quad(const AffinityOracle& F, const MolGraph& d, const ProteinSeq& p,
                         const MolGraph& d2, const ProteinSeq& p2);
// Same, reusing an already-known F(d, p); trainers cache it per reference pair.
OracleQuad evaluate_quad(const AffinityOracle& F, const MolGraph& d, const ProteinSeq& p,
                         const MolGraph& d2, const ProteinSeq& p2, double f_ref);

// Deterministic recomposition; the audit path recomputes breakdowns through
// this exact function, so it must stay bit-stable.
RewardBreakdown breakdown_from(const OracleQuad& q, double sim_drug, double sim_protein,
                               const RewardWeights& w, SignScope scope = SignScope::first_term);

RewardBreakdown total_reward(const RewardWeights& w, const AffinityOracle& F, const MolGraph& d,
                             const ProteinSeq& p, const MolGraph& d2, const ProteinSeq& p2,
                             SignScope scope = SignScope::first_term);

}  // namespace cfdta
