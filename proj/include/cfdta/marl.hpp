#pragma once

// Two cooperating agents, one editing the drug and one the protein, trained
// actor-critic style against a black-box affinity predictor. Episodes have
// length one: reset to the reference pair, take one joint action, collect
// the counterfactual reward. The coupled trainer routes each critic through
// an attention mix of the other agent's embedding; the uncoupled variant
// zeroes that path but keeps the architecture, so the two are comparable
// parameter for parameter.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cfdta/actionspace.hpp"
#include "cfdta/molgraph.hpp"
#include "cfdta/neural.hpp"
#include "cfdta/oracle.hpp"
#include "cfdta/protein.hpp"
#include "cfdta/reward.hpp"
#include "cfdta/rng.hpp"

namespace cfdta {

enum class Method { macda, mameg, jointlist };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct TrainConfig {
  double gamma = 0.99;
  int batch_size = 1024;
  double policy_lr = 0.001;
  double critic_lr = 0.001;
  int episodes = 10000;
  std::uint64_t seed = 0;
  RewardWeights weights;
  SignScope sign_scope = SignScope::first_term;

  // Updates run every update_every episodes on a uniform minibatch (whole
  // buffer while it is still smaller than batch_size).
  int update_every = 1;
  std::vector<int> hidden = {128, 128};
  int embed_dim = 64;
  int attn_dim = 32;
  int obs_fp_radius = 2;
  int obs_fp_nbits = 2048;
  double temperature = 1.0;
  int top_k = 10;
  std::vector<Element> admissible = {Element::C, Element::N, Element::O, Element::F};
  // Score single-sided baseline candidates by signed affinity drop instead
  // of absolute shift.
  bool jointlist_signed = false;
  // Keep the attention value transform at zero and out of the optimizer.
  bool freeze_attention = false;
  bool use_sgd = false;
  // Mutations at positions past the encoder window are invisible to
  // sequence-based predictors; excluded unless explicitly enabled.
  bool allow_beyond_encoder = false;
};

void validate_train_config(const TrainConfig& cfg);

struct CounterfactualRecord {
  int pair_index = 0;
  std::string method;
  std::string drug_ref;
  std::string drug_cf;
  std::string protein_ref;
  std::string protein_cf;
  std::string drug_action;
  int protein_position = -1;  // -1 when the record carries no protein edit
  OracleQuad quad;
  RewardBreakdown breakdown;
};

// One record per line; numbers round-trip exactly.
std::string record_to_json(const CounterfactualRecord& rec);
CounterfactualRecord record_from_json(const std::string& line);

struct EnvState {
  MolGraph drug_ref;
  ProteinSeq protein_ref;
  MolGraph drug_cur;
  ProteinSeq protein_cur;
  Eigen::VectorXd drug_obs;
  EncodedProtein protein_obs;
  double f_ref = 0.0;
  bool terminal = false;

  EnvState(MolGraph d, ProteinSeq p)
      : drug_ref(d), protein_ref(p), drug_cur(std::move(d)), protein_cur(std::move(p)) {}
};

EnvState env_reset(const MolGraph& drug, const ProteinSeq& protein, const AffinityOracle& F,
                   const TrainConfig& cfg);
// Applies the joint action, queries the predictor for the three edited
// combinations (the reference value is cached in the state), and returns the
// terminal successor plus the reward breakdown.
std::pair<EnvState, RewardBreakdown> env_step(const EnvState& state, const JointAction& joint,
                                              const AffinityOracle& F, const TrainConfig& cfg);

// reward + gamma * Q(s',a') - Q(s,a); the successor term is dropped at
// terminal states. Training minimizes the square of this.
double td_residual(double reward, double gamma, bool terminal, double q_next, double q_value);

// Q_own = f([g(own_input); attention mix over the other agents' embeddings]).
double maac_q(const Mlp& g_own, const Mlp& f_own, const AttentionHead& head,
              const Eigen::VectorXd& own_input,
              const std::vector<Eigen::VectorXd>& other_embeddings);

class JointTrainer {
 public:
  enum class Coupling { attention, independent };

  JointTrainer(const MolGraph& drug, const ProteinSeq& protein, const AffinityOracle& F,
               TrainConfig cfg, Coupling coupling);

  void run_episode();
  void train();  // cfg.episodes episodes

  // Visited joint edits ranked by reward, deduplicated, truncated to top_k.
  std::vector<CounterfactualRecord> harvest() const;

  // Every trainable value in a pinned order; both coupling modes produce
  // vectors of identical layout.
  Eigen::VectorXd parameters_flat() const;

  Eigen::VectorXd drug_policy();
  Eigen::VectorXd protein_policy();
  double critic_q_drug(int drug_action, int protein_action);
  double critic_q_protein(int drug_action, int protein_action);

  const std::vector<DrugAction>& drug_actions() const { return actions_d_; }
  const std::vector<ProteinAction>& protein_actions() const { return actions_p_; }
  int episodes_run() const { return episode_count_; }
  double reference_affinity() const { return f_ref_; }

 private:
  struct Transition {
    int a_d;
    int a_p;
    double reward;
  };

  struct Visit {
    OracleQuad quad;
    RewardBreakdown breakdown;
  };

  const Visit& visit_for(int a_d, int a_p);
  void refresh_policies();
  void update();
  std::vector<Transition> draw_minibatch();
  Eigen::MatrixXd gather_inputs(const Eigen::MatrixXd& source,
                                const std::vector<Transition>& batch, bool drug_side) const;

  TrainConfig cfg_;
  Coupling coupling_;
  const AffinityOracle* oracle_;

  MolGraph drug_ref_;
  ProteinSeq protein_ref_;
  double f_ref_ = 0.0;

  std::vector<DrugAction> actions_d_;
  std::vector<ProteinAction> actions_p_;
  std::vector<std::string> smiles_d_;
  std::vector<double> f_drug_edit_, f_protein_edit_;
  std::vector<double> sim_d_, sim_p_;

  Eigen::MatrixXd policy_in_d_, policy_in_p_;  // one column per action
  Eigen::MatrixXd critic_in_d_, critic_in_p_;

  std::unique_ptr<Mlp> policy_d_, policy_p_;
  std::unique_ptr<Mlp> g_d_, f_d_, g_p_, f_p_;
  std::unique_ptr<AttentionHead> attn_;
  bool attention_trained_ = false;

  std::unique_ptr<Optimizer> opt_policy_d_, opt_policy_p_, opt_critic_;

  DetRng rng_sample_;
  DetRng rng_batch_;

  std::vector<Transition> buffer_;
  std::map<std::pair<int, int>, Visit> visited_;
  int episode_count_ = 0;

  Eigen::VectorXd probs_d_, probs_p_;
  bool policies_fresh_ = false;
};

std::vector<CounterfactualRecord> train_macda(const MolGraph& drug, const ProteinSeq& protein,
                                              const AffinityOracle& F, const TrainConfig& cfg);
std::vector<CounterfactualRecord> train_mameg(const MolGraph& drug, const ProteinSeq& protein,
                                              const AffinityOracle& F, const TrainConfig& cfg);
// Cross join of the independently top-ranked single-sided edits, rescored
// jointly. No RNG anywhere in this path.
std::vector<CounterfactualRecord> joint_list_baseline(const MolGraph& drug,
                                                      const ProteinSeq& protein,
                                                      const AffinityOracle& F,
                                                      const TrainConfig& cfg);

}  // namespace cfdta
