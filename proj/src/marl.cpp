#include "cfdta/marl.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "cfdta/error.hpp"
#include "cfdta/smiles.hpp"

namespace cfdta {

namespace {

// Stream separators so init, action sampling, and minibatch draws never
// share a generator state for a given seed.
constexpr std::uint64_t kInitStream = 0x1b873593a4093822ull;
constexpr std::uint64_t kSampleStream = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kBatchStream = 0xc2b2ae3d27d4eb4full;

Eigen::VectorXd protein_obs_vector(const ProteinSeq& p) {
  const EncodedProtein enc = encode_protein(p);
  Eigen::VectorXd v(enc.size());
  for (Eigen::Index i = 0; i < enc.size(); ++i) v[i] = enc[i] / 20.0;
  return v;
}

Eigen::VectorXd drug_obs_vector(const MolGraph& g, const TrainConfig& cfg) {
  return compute_fingerprint(g, cfg.obs_fp_radius, cfg.obs_fp_nbits).to_vector();
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::macda: return "macda";
    case Method::mameg: return "mameg";
    case Method::jointlist: return "jointlist";
  }
  return "macda";
}

Method method_from_name(const std::string& name) {
  if (name == "macda") return Method::macda;
  if (name == "mameg") return Method::mameg;
  if (name == "jointlist") return Method::jointlist;
  throw ConfigError("unknown method \"" + name + "\" (expected macda, mameg, or jointlist)");
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.gamma < 0.0 || cfg.gamma > 1.0) throw ConfigError("train: gamma must be in [0, 1]");
  if (cfg.batch_size <= 0) throw ConfigError("train: batch_size must be positive");
  if (cfg.policy_lr <= 0.0 || cfg.critic_lr <= 0.0) {
    throw ConfigError("train: learning rates must be positive");
  }
  if (cfg.episodes < 0) throw ConfigError("train: episodes must be non-negative");
  if (cfg.update_every <= 0) throw ConfigError("train: update_every must be positive");
  if (cfg.hidden.empty()) throw ConfigError("train: hidden layer list must be nonempty");
  for (int h : cfg.hidden) {
    if (h <= 0) throw ConfigError("train: hidden sizes must be positive");
  }
  if (cfg.embed_dim <= 0 || cfg.attn_dim <= 0) {
    throw ConfigError("train: embedding dimensions must be positive");
  }
  if (cfg.obs_fp_radius < 0 || cfg.obs_fp_nbits <= 0) {
    throw ConfigError("train: observation fingerprint parameters invalid");
  }
  if (cfg.temperature <= 0.0) throw ConfigError("train: temperature must be positive");
  if (cfg.top_k <= 0) throw ConfigError("train: top_k must be positive");
  if (cfg.admissible.empty()) throw ConfigError("train: admissible element set is empty");
  if (cfg.weights.alpha_r < 0.0 || cfg.weights.alpha_d < 0.0 || cfg.weights.alpha_p < 0.0) {
    throw ConfigError("train: reward weights must be non-negative");
  }
}

std::string record_to_json(const CounterfactualRecord& rec) {
  nlohmann::json j;
  j["pair_index"] = rec.pair_index;
  j["method"] = rec.method;
  j["drug_ref"] = rec.drug_ref;
  j["drug_cf"] = rec.drug_cf;
  j["protein_ref"] = rec.protein_ref;
  j["protein_cf"] = rec.protein_cf;
  j["drug_action"] = rec.drug_action;
  j["protein_position"] = rec.protein_position;
  j["oracle"] = {{"f_ref", rec.quad.f_ref},
                 {"f_drug_edit", rec.quad.f_drug_edit},
                 {"f_protein_edit", rec.quad.f_protein_edit},
                 {"f_joint", rec.quad.f_joint}};
  j["breakdown"] = {{"delta_total", rec.breakdown.delta_total},
                    {"delta_joint", rec.breakdown.delta_joint},
                    {"delta_sjoint", rec.breakdown.delta_sjoint},
                    {"sim_drug", rec.breakdown.sim_drug},
                    {"sim_protein", rec.breakdown.sim_protein},
                    {"reward", rec.breakdown.reward}};
  return j.dump();
}

CounterfactualRecord record_from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("record: ") + e.what());
  }
  try {
    CounterfactualRecord rec;
    rec.pair_index = j.at("pair_index").get<int>();
    rec.method = j.at("method").get<std::string>();
    rec.drug_ref = j.at("drug_ref").get<std::string>();
    rec.drug_cf = j.at("drug_cf").get<std::string>();
    rec.protein_ref = j.at("protein_ref").get<std::string>();
    rec.protein_cf = j.at("protein_cf").get<std::string>();
    rec.drug_action = j.at("drug_action").get<std::string>();
    rec.protein_position = j.at("protein_position").get<int>();
    const nlohmann::json& q = j.at("oracle");
    rec.quad.f_ref = q.at("f_ref").get<double>();
    rec.quad.f_drug_edit = q.at("f_drug_edit").get<double>();
    rec.quad.f_protein_edit = q.at("f_protein_edit").get<double>();
    rec.quad.f_joint = q.at("f_joint").get<double>();
    const nlohmann::json& b = j.at("breakdown");
    rec.breakdown.delta_total = b.at("delta_total").get<double>();
    rec.breakdown.delta_joint = b.at("delta_joint").get<double>();
    rec.breakdown.delta_sjoint = b.at("delta_sjoint").get<double>();
    rec.breakdown.sim_drug = b.at("sim_drug").get<double>();
    rec.breakdown.sim_protein = b.at("sim_protein").get<double>();
    rec.breakdown.reward = b.at("reward").get<double>();
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("record: missing or mistyped field: ") + e.what());
  }
}

EnvState env_reset(const MolGraph& drug, const ProteinSeq& protein, const AffinityOracle& F,
                   const TrainConfig& cfg) {
  EnvState s(drug, protein);
  s.drug_obs = drug_obs_vector(drug, cfg);
  s.protein_obs = encode_protein(protein);
  s.f_ref = F.predict(drug, protein);
  s.terminal = false;
  return s;
}

std::pair<EnvState, RewardBreakdown> env_step(const EnvState& state, const JointAction& joint,
                                              const AffinityOracle& F, const TrainConfig& cfg) {
  if (state.terminal) throw RuntimeError("env_step: episode already terminal");
  const MolGraph& d2 = joint.drug ? joint.drug->result : state.drug_cur;
  // Re-deriving the mutation validates the position against the live
  // sequence; drug edits carry their prevalidated result graph.
  const ProteinSeq p2 = joint.protein
                            ? mutate_to_alanine(state.protein_cur, joint.protein->position)
                            : state.protein_cur;
  const OracleQuad quad = evaluate_quad(F, state.drug_cur, state.protein_cur, d2, p2, state.f_ref);
  const double sim_d = cosine_similarity(F.encode_drug(state.drug_cur), F.encode_drug(d2));
  const double sim_p =
      cosine_similarity(F.encode_protein(state.protein_cur), F.encode_protein(p2));
  const RewardBreakdown breakdown = breakdown_from(quad, sim_d, sim_p, cfg.weights, cfg.sign_scope);

  EnvState next(state.drug_ref, state.protein_ref);
  next.drug_cur = d2;
  next.protein_cur = p2;
  next.drug_obs = drug_obs_vector(d2, cfg);
  next.protein_obs = encode_protein(p2);
  next.f_ref = state.f_ref;
  next.terminal = true;
  return {std::move(next), breakdown};
}

double td_residual(double reward, double gamma, bool terminal, double q_next, double q_value) {
  return reward + (terminal ? 0.0 : gamma * q_next) - q_value;
}

double maac_q(const Mlp& g_own, const Mlp& f_own, const AttentionHead& head,
              const Eigen::VectorXd& own_input,
              const std::vector<Eigen::VectorXd>& other_embeddings) {
  const Eigen::VectorXd emb = g_own.forward_vec(own_input);
  const Eigen::VectorXd x = head.mix(emb, other_embeddings);
  Eigen::VectorXd joined(emb.size() + x.size());
  joined << emb, x;
  return f_own.forward_vec(joined)(0);
}

JointTrainer::JointTrainer(const MolGraph& drug, const ProteinSeq& protein,
                           const AffinityOracle& F, TrainConfig cfg, Coupling coupling)
    : cfg_(std::move(cfg)),
      coupling_(coupling),
      oracle_(&F),
      drug_ref_(drug),
      protein_ref_(protein),
      rng_sample_(mix64(cfg_.seed ^ kSampleStream)),
      rng_batch_(mix64(cfg_.seed ^ kBatchStream)) {
  validate_train_config(cfg_);

  actions_d_ = enumerate_drug_actions(drug_ref_, cfg_.admissible);
  if (actions_d_.empty()) throw DataError("drug action space is empty for the reference molecule");
  actions_p_ = enumerate_protein_actions(protein_ref_);
  if (!cfg_.allow_beyond_encoder) {
    actions_p_.erase(std::remove_if(actions_p_.begin(), actions_p_.end(),
                                    [](const ProteinAction& a) { return a.beyond_encoder; }),
                     actions_p_.end());
  }
  if (actions_p_.empty()) {
    throw DataError("protein action space is empty (every visible position is already alanine)");
  }

  f_ref_ = oracle_->predict(drug_ref_, protein_ref_);
  const Eigen::VectorXd oracle_drug_ref = oracle_->encode_drug(drug_ref_);
  const Eigen::VectorXd oracle_protein_ref = oracle_->encode_protein(protein_ref_);
  const Eigen::VectorXd obs_drug_ref = drug_obs_vector(drug_ref_, cfg_);
  const Eigen::VectorXd obs_protein_ref = protein_obs_vector(protein_ref_);

  const int n_d = static_cast<int>(actions_d_.size());
  const int n_p = static_cast<int>(actions_p_.size());
  smiles_d_.resize(n_d);
  f_drug_edit_.resize(n_d);
  sim_d_.resize(n_d);
  f_protein_edit_.resize(n_p);
  sim_p_.resize(n_p);

  const int fp_dim = static_cast<int>(obs_drug_ref.size());
  const int enc_dim = static_cast<int>(obs_protein_ref.size());
  policy_in_d_.resize(fp_dim + enc_dim + fp_dim, n_d);
  critic_in_d_.resize(2 * fp_dim, n_d);
  for (int i = 0; i < n_d; ++i) {
    const MolGraph& result = actions_d_[i].result;
    smiles_d_[i] = write_smiles(result);
    f_drug_edit_[i] = oracle_->predict(result, protein_ref_);
    sim_d_[i] = cosine_similarity(oracle_drug_ref, oracle_->encode_drug(result));
    const Eigen::VectorXd obs = drug_obs_vector(result, cfg_);
    policy_in_d_.col(i) << obs_drug_ref, obs_protein_ref, obs;
    critic_in_d_.col(i) << obs_drug_ref, obs;
  }

  policy_in_p_.resize(fp_dim + enc_dim + enc_dim, n_p);
  critic_in_p_.resize(2 * enc_dim, n_p);
  for (int j = 0; j < n_p; ++j) {
    const ProteinSeq& result = actions_p_[j].result;
    f_protein_edit_[j] = oracle_->predict(drug_ref_, result);
    sim_p_[j] = cosine_similarity(oracle_protein_ref, oracle_->encode_protein(result));
    const Eigen::VectorXd obs = protein_obs_vector(result);
    policy_in_p_.col(j) << obs_drug_ref, obs_protein_ref, obs;
    critic_in_p_.col(j) << obs_protein_ref, obs;
  }

  // Network construction order is pinned; both coupling modes consume the
  // same init stream so their parameter layouts and values coincide.
  DetRng init_rng(mix64(cfg_.seed ^ kInitStream));
  auto sizes = [&](int in, int out) {
    std::vector<int> s;
    s.push_back(in);
    s.insert(s.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    s.push_back(out);
    return s;
  };
  policy_d_ = std::make_unique<Mlp>(sizes(fp_dim + enc_dim + fp_dim, 1), init_rng);
  policy_p_ = std::make_unique<Mlp>(sizes(fp_dim + enc_dim + enc_dim, 1), init_rng);
  g_d_ = std::make_unique<Mlp>(sizes(2 * fp_dim, cfg_.embed_dim), init_rng);
  f_d_ = std::make_unique<Mlp>(sizes(2 * cfg_.embed_dim, 1), init_rng);
  g_p_ = std::make_unique<Mlp>(sizes(2 * enc_dim, cfg_.embed_dim), init_rng);
  f_p_ = std::make_unique<Mlp>(sizes(2 * cfg_.embed_dim, 1), init_rng);
  attn_ = std::make_unique<AttentionHead>(cfg_.embed_dim, cfg_.attn_dim, cfg_.embed_dim, init_rng);

  attention_trained_ = coupling_ == Coupling::attention && !cfg_.freeze_attention;
  if (!attention_trained_) attn_->freeze_value_to_zero();

  const Optimizer::Kind kind = cfg_.use_sgd ? Optimizer::Kind::sgd : Optimizer::Kind::adam;
  opt_policy_d_ = std::make_unique<Optimizer>(kind, cfg_.policy_lr);
  opt_policy_p_ = std::make_unique<Optimizer>(kind, cfg_.policy_lr);
  opt_critic_ = std::make_unique<Optimizer>(kind, cfg_.critic_lr);
}

const JointTrainer::Visit& JointTrainer::visit_for(int a_d, int a_p) {
  const auto key = std::make_pair(a_d, a_p);
  auto it = visited_.find(key);
  if (it != visited_.end()) return it->second;
  Visit visit;
  visit.quad.f_ref = f_ref_;
  visit.quad.f_drug_edit = f_drug_edit_[a_d];
  visit.quad.f_protein_edit = f_protein_edit_[a_p];
  visit.quad.f_joint = oracle_->predict(actions_d_[a_d].result, actions_p_[a_p].result);
  visit.breakdown =
      breakdown_from(visit.quad, sim_d_[a_d], sim_p_[a_p], cfg_.weights, cfg_.sign_scope);
  return visited_.emplace(key, visit).first->second;
}

void JointTrainer::refresh_policies() {
  if (policies_fresh_) return;
  const Eigen::VectorXd logits_d = policy_d_->forward(policy_in_d_).row(0);
  const Eigen::VectorXd logits_p = policy_p_->forward(policy_in_p_).row(0);
  probs_d_ = softmax_all(logits_d / cfg_.temperature);
  probs_p_ = softmax_all(logits_p / cfg_.temperature);
  policies_fresh_ = true;
}

void JointTrainer::run_episode() {
  refresh_policies();
  const int a_d = rng_sample_.categorical(probs_d_);
  const int a_p = rng_sample_.categorical(probs_p_);
  const Visit& visit = visit_for(a_d, a_p);
  buffer_.push_back({a_d, a_p, visit.breakdown.reward});
  ++episode_count_;
  if (episode_count_ % cfg_.update_every == 0) update();
}

void JointTrainer::train() {
  for (int e = 0; e < cfg_.episodes; ++e) run_episode();
}

std::vector<JointTrainer::Transition> JointTrainer::draw_minibatch() {
  const int available = static_cast<int>(buffer_.size());
  if (available <= cfg_.batch_size) return buffer_;
  std::vector<Transition> batch;
  batch.reserve(cfg_.batch_size);
  for (int s = 0; s < cfg_.batch_size; ++s) batch.push_back(buffer_[rng_batch_.index(available)]);
  return batch;
}

Eigen::MatrixXd JointTrainer::gather_inputs(const Eigen::MatrixXd& source,
                                            const std::vector<Transition>& batch,
                                            bool drug_side) const {
  Eigen::MatrixXd out(source.rows(), batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    out.col(s) = source.col(drug_side ? batch[s].a_d : batch[s].a_p);
  }
  return out;
}

void JointTrainer::update() {
  if (buffer_.empty()) return;
  const std::vector<Transition> batch = draw_minibatch();
  const int n = static_cast<int>(batch.size());
  const double inv_n = 1.0 / n;

  Eigen::VectorXd rewards(n);
  for (int s = 0; s < n; ++s) rewards[s] = batch[s].reward;

  const Eigen::MatrixXd in_d = gather_inputs(critic_in_d_, batch, true);
  const Eigen::MatrixXd in_p = gather_inputs(critic_in_p_, batch, false);

  // Critic pass. Each agent's scalar Q is f([own embedding; cross term]);
  // the cross term is the attention-mixed other embedding, identically zero
  // when the coupling is off or frozen (leaky(0) = 0).
  MlpCache cache_gd, cache_gp, cache_fd, cache_fp;
  const Eigen::MatrixXd emb_d = g_d_->forward(in_d, &cache_gd);
  const Eigen::MatrixXd emb_p = g_p_->forward(in_p, &cache_gp);
  const Eigen::MatrixXd& v = attn_->value();
  const auto leaky_mat = [](const Eigen::MatrixXd& m) {
    return m.unaryExpr([](double x) { return leaky_relu(x); });
  };
  const Eigen::MatrixXd x_d = leaky_mat(v * emb_p);
  const Eigen::MatrixXd x_p = leaky_mat(v * emb_d);
  Eigen::MatrixXd fin_d(emb_d.rows() + x_d.rows(), n);
  fin_d << emb_d, x_d;
  Eigen::MatrixXd fin_p(emb_p.rows() + x_p.rows(), n);
  fin_p << emb_p, x_p;
  const Eigen::MatrixXd q_d = f_d_->forward(fin_d, &cache_fd);
  const Eigen::MatrixXd q_p = f_p_->forward(fin_p, &cache_fp);

  // Mean squared residual against the terminal target (the reward itself).
  const Eigen::MatrixXd dq_d = (q_d.row(0).transpose() - rewards).transpose() * (2.0 * inv_n);
  const Eigen::MatrixXd dq_p = (q_p.row(0).transpose() - rewards).transpose() * (2.0 * inv_n);

  MlpGrads grads_fd, grads_fp, grads_gd, grads_gp;
  const Eigen::MatrixXd dfin_d = f_d_->backward(cache_fd, dq_d, &grads_fd);
  const Eigen::MatrixXd dfin_p = f_p_->backward(cache_fp, dq_p, &grads_fp);

  const int e_dim = static_cast<int>(emb_d.rows());
  Eigen::MatrixXd demb_d = dfin_d.topRows(e_dim);
  Eigen::MatrixXd demb_p = dfin_p.topRows(e_dim);
  Eigen::MatrixXd dvalue = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  const auto leaky_grad_mat = [](const Eigen::MatrixXd& y) {
    return y.unaryExpr([](double o) { return leaky_relu_grad_from_output(o); });
  };
  {
    // Cross-term backward; with one other agent the attention weight is a
    // constant 1, so only the value transform and the embeddings get grads.
    const Eigen::MatrixXd du_d = dfin_d.bottomRows(x_d.rows()).cwiseProduct(leaky_grad_mat(x_d));
    dvalue += du_d * emb_p.transpose();
    demb_p += v.transpose() * du_d;
    const Eigen::MatrixXd du_p = dfin_p.bottomRows(x_p.rows()).cwiseProduct(leaky_grad_mat(x_p));
    dvalue += du_p * emb_d.transpose();
    demb_d += v.transpose() * du_p;
  }
  g_d_->backward(cache_gd, demb_d, &grads_gd);
  g_p_->backward(cache_gp, demb_p, &grads_gp);

  const int critic_size = g_d_->param_size() + f_d_->param_size() + g_p_->param_size() +
                          f_p_->param_size() + (attention_trained_ ? attn_->param_size() : 0);
  Eigen::VectorXd critic_params(critic_size), critic_grad(critic_size);
  int at = 0;
  auto pack = [&](const Mlp& net, const MlpGrads& g) {
    critic_params.segment(at, net.param_size()) = net.params_flat();
    critic_grad.segment(at, net.param_size()) = net.grads_flat(g);
    at += net.param_size();
  };
  pack(*g_d_, grads_gd);
  pack(*f_d_, grads_fd);
  pack(*g_p_, grads_gp);
  pack(*f_p_, grads_fp);
  if (attention_trained_) {
    AttentionGrads ag;
    ag.dwq = Eigen::MatrixXd::Zero(cfg_.attn_dim, cfg_.embed_dim);
    ag.dwk = Eigen::MatrixXd::Zero(cfg_.attn_dim, cfg_.embed_dim);
    ag.dvalue = dvalue;
    critic_params.segment(at, attn_->param_size()) = attn_->params_flat();
    critic_grad.segment(at, attn_->param_size()) = attn_->grads_flat(ag);
    at += attn_->param_size();
  }
  opt_critic_->step(critic_params, critic_grad);
  at = 0;
  auto unpack = [&](Mlp& net) {
    net.set_params_flat(critic_params.segment(at, net.param_size()));
    at += net.param_size();
  };
  unpack(*g_d_);
  unpack(*f_d_);
  unpack(*g_p_);
  unpack(*f_p_);
  if (attention_trained_) {
    attn_->set_params_flat(critic_params.segment(at, attn_->param_size()));
  }

  // Policy pass, using post-update critic values as the per-sample signal.
  const Eigen::MatrixXd emb_d2 = g_d_->forward(in_d);
  const Eigen::MatrixXd emb_p2 = g_p_->forward(in_p);
  const Eigen::MatrixXd& v2 = attn_->value();
  Eigen::MatrixXd fin_d2(emb_d2.rows() + e_dim, n);
  fin_d2 << emb_d2, leaky_mat(v2 * emb_p2);
  Eigen::MatrixXd fin_p2(emb_p2.rows() + e_dim, n);
  fin_p2 << emb_p2, leaky_mat(v2 * emb_d2);
  const Eigen::VectorXd signal_d = f_d_->forward(fin_d2).row(0);
  const Eigen::VectorXd signal_p = f_p_->forward(fin_p2).row(0);

  // Ascent on mean_s Q_s log pi(a_s); over a fixed reference state the batch
  // gradient w.r.t. the logits collapses to scatter(Q) - sum(Q) * pi.
  auto policy_step = [&](Mlp& policy, Optimizer& opt, const Eigen::MatrixXd& inputs,
                         const Eigen::VectorXd& signal, bool drug_side) {
    MlpCache cache;
    const Eigen::MatrixXd logits = policy.forward(inputs, &cache);
    const Eigen::VectorXd probs =
        softmax_all(Eigen::VectorXd(logits.row(0)) / cfg_.temperature);
    Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(logits.cols());
    double total_signal = 0.0;
    for (int s = 0; s < n; ++s) {
      dlogits[drug_side ? batch[s].a_d : batch[s].a_p] += signal[s];
      total_signal += signal[s];
    }
    dlogits -= total_signal * probs;
    dlogits *= inv_n / cfg_.temperature;
    MlpGrads grads;
    // Optimizer minimizes, so negate the ascent direction.
    policy.backward(cache, (-dlogits).transpose(), &grads);
    Eigen::VectorXd params = policy.params_flat();
    opt.step(params, policy.grads_flat(grads));
    policy.set_params_flat(params);
  };
  policy_step(*policy_d_, *opt_policy_d_, policy_in_d_, signal_d, true);
  policy_step(*policy_p_, *opt_policy_p_, policy_in_p_, signal_p, false);
  policies_fresh_ = false;
}

std::vector<CounterfactualRecord> JointTrainer::harvest() const {
  struct Keyed {
    std::pair<std::string, int> key;
    int a_d, a_p;
    Visit visit;
  };
  std::map<std::pair<std::string, int>, Keyed> best;
  for (const auto& [key, visit] : visited_) {
    const auto dedup_key =
        std::make_pair(actions_d_[key.first].certificate, actions_p_[key.second].position);
    auto it = best.find(dedup_key);
    if (it == best.end() || visit.breakdown.reward > it->second.visit.breakdown.reward) {
      best[dedup_key] = Keyed{dedup_key, key.first, key.second, visit};
    }
  }
  std::vector<Keyed> ranked;
  ranked.reserve(best.size());
  for (auto& [k, v] : best) ranked.push_back(v);
  std::sort(ranked.begin(), ranked.end(), [](const Keyed& a, const Keyed& b) {
    if (a.visit.breakdown.reward != b.visit.breakdown.reward) {
      return a.visit.breakdown.reward > b.visit.breakdown.reward;
    }
    return a.key < b.key;
  });
  if (static_cast<int>(ranked.size()) > cfg_.top_k) ranked.resize(cfg_.top_k);

  const std::string ref_smiles = write_smiles(drug_ref_);
  std::vector<CounterfactualRecord> records;
  records.reserve(ranked.size());
  for (const Keyed& k : ranked) {
    CounterfactualRecord rec;
    rec.drug_ref = ref_smiles;
    rec.drug_cf = smiles_d_[k.a_d];
    rec.protein_ref = protein_ref_.str();
    rec.protein_cf = actions_p_[k.a_p].result.str();
    rec.drug_action = actions_d_[k.a_d].describe();
    rec.protein_position = actions_p_[k.a_p].position;
    rec.quad = k.visit.quad;
    rec.breakdown = k.visit.breakdown;
    records.push_back(std::move(rec));
  }
  return records;
}

Eigen::VectorXd JointTrainer::parameters_flat() const {
  const int total = policy_d_->param_size() + policy_p_->param_size() + g_d_->param_size() +
                    f_d_->param_size() + g_p_->param_size() + f_p_->param_size() +
                    attn_->param_size();
  Eigen::VectorXd flat(total);
  int at = 0;
  auto put = [&](const Eigen::VectorXd& v) {
    flat.segment(at, v.size()) = v;
    at += static_cast<int>(v.size());
  };
  put(policy_d_->params_flat());
  put(policy_p_->params_flat());
  put(g_d_->params_flat());
  put(f_d_->params_flat());
  put(g_p_->params_flat());
  put(f_p_->params_flat());
  put(attn_->params_flat());
  return flat;
}

Eigen::VectorXd JointTrainer::drug_policy() {
  refresh_policies();
  return probs_d_;
}

Eigen::VectorXd JointTrainer::protein_policy() {
  refresh_policies();
  return probs_p_;
}

double JointTrainer::critic_q_drug(int drug_action, int protein_action) {
  const Eigen::VectorXd emb_p = g_p_->forward_vec(critic_in_p_.col(protein_action));
  return maac_q(*g_d_, *f_d_, *attn_, critic_in_d_.col(drug_action), {emb_p});
}

double JointTrainer::critic_q_protein(int drug_action, int protein_action) {
  const Eigen::VectorXd emb_d = g_d_->forward_vec(critic_in_d_.col(drug_action));
  return maac_q(*g_p_, *f_p_, *attn_, critic_in_p_.col(protein_action), {emb_d});
}

namespace {

std::vector<CounterfactualRecord> run_trainer(const MolGraph& drug, const ProteinSeq& protein,
                                              const AffinityOracle& F, const TrainConfig& cfg,
                                              JointTrainer::Coupling coupling,
                                              const char* method) {
  JointTrainer trainer(drug, protein, F, cfg, coupling);
  trainer.train();
  std::vector<CounterfactualRecord> records = trainer.harvest();
  for (CounterfactualRecord& r : records) r.method = method;
  return records;
}

}  // namespace

std::vector<CounterfactualRecord> train_macda(const MolGraph& drug, const ProteinSeq& protein,
                                              const AffinityOracle& F, const TrainConfig& cfg) {
  return run_trainer(drug, protein, F, cfg, JointTrainer::Coupling::attention, "macda");
}

std::vector<CounterfactualRecord> train_mameg(const MolGraph& drug, const ProteinSeq& protein,
                                              const AffinityOracle& F, const TrainConfig& cfg) {
  return run_trainer(drug, protein, F, cfg, JointTrainer::Coupling::independent, "mameg");
}

std::vector<CounterfactualRecord> joint_list_baseline(const MolGraph& drug,
                                                      const ProteinSeq& protein,
                                                      const AffinityOracle& F,
                                                      const TrainConfig& cfg) {
  validate_train_config(cfg);
  std::vector<DrugAction> actions_d = enumerate_drug_actions(drug, cfg.admissible);
  if (actions_d.empty()) throw DataError("drug action space is empty for the reference molecule");
  std::vector<ProteinAction> actions_p = enumerate_protein_actions(protein);
  if (!cfg.allow_beyond_encoder) {
    actions_p.erase(std::remove_if(actions_p.begin(), actions_p.end(),
                                   [](const ProteinAction& a) { return a.beyond_encoder; }),
                    actions_p.end());
  }
  if (actions_p.empty()) {
    throw DataError("protein action space is empty (every visible position is already alanine)");
  }

  const double f_ref = F.predict(drug, protein);
  const Eigen::VectorXd enc_drug_ref = F.encode_drug(drug);
  const Eigen::VectorXd enc_protein_ref = F.encode_protein(protein);

  struct Scored {
    int index;
    double score;
    double f_edit;
    double sim;
  };
  auto rank = [&](std::vector<Scored>& scored, auto tie_less) {
    std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      return tie_less(a.index, b.index);
    });
    if (static_cast<int>(scored.size()) > cfg.top_k) scored.resize(cfg.top_k);
  };

  std::vector<Scored> top_d;
  for (int i = 0; i < static_cast<int>(actions_d.size()); ++i) {
    const double f_edit = F.predict(actions_d[i].result, protein);
    const double shift = cfg.jointlist_signed ? (f_ref - f_edit) : std::abs(f_edit - f_ref);
    const double sim = cosine_similarity(enc_drug_ref, F.encode_drug(actions_d[i].result));
    top_d.push_back({i, shift + cfg.weights.alpha_d * sim, f_edit, sim});
  }
  rank(top_d, [&](int a, int b) { return actions_d[a].certificate < actions_d[b].certificate; });

  std::vector<Scored> top_p;
  for (int j = 0; j < static_cast<int>(actions_p.size()); ++j) {
    const double f_edit = F.predict(drug, actions_p[j].result);
    const double shift = cfg.jointlist_signed ? (f_ref - f_edit) : std::abs(f_edit - f_ref);
    const double sim = cosine_similarity(enc_protein_ref, F.encode_protein(actions_p[j].result));
    top_p.push_back({j, shift + cfg.weights.alpha_p * sim, f_edit, sim});
  }
  rank(top_p, [&](int a, int b) { return actions_p[a].position < actions_p[b].position; });

  struct Joined {
    int i, j;
    OracleQuad quad;
    RewardBreakdown breakdown;
  };
  std::vector<Joined> joined;
  for (const Scored& sd : top_d) {
    for (const Scored& sp : top_p) {
      OracleQuad quad;
      quad.f_ref = f_ref;
      quad.f_drug_edit = sd.f_edit;
      quad.f_protein_edit = sp.f_edit;
      quad.f_joint = F.predict(actions_d[sd.index].result, actions_p[sp.index].result);
      const RewardBreakdown b = breakdown_from(quad, sd.sim, sp.sim, cfg.weights, cfg.sign_scope);
      joined.push_back({sd.index, sp.index, quad, b});
    }
  }
  std::sort(joined.begin(), joined.end(), [&](const Joined& a, const Joined& b) {
    if (a.breakdown.reward != b.breakdown.reward) return a.breakdown.reward > b.breakdown.reward;
    if (actions_d[a.i].certificate != actions_d[b.i].certificate) {
      return actions_d[a.i].certificate < actions_d[b.i].certificate;
    }
    return actions_p[a.j].position < actions_p[b.j].position;
  });
  if (static_cast<int>(joined.size()) > cfg.top_k) joined.resize(cfg.top_k);

  const std::string ref_smiles = write_smiles(drug);
  std::vector<CounterfactualRecord> records;
  records.reserve(joined.size());
  for (const Joined& jn : joined) {
    CounterfactualRecord rec;
    rec.method = "jointlist";
    rec.drug_ref = ref_smiles;
    rec.drug_cf = write_smiles(actions_d[jn.i].result);
    rec.protein_ref = protein.str();
    rec.protein_cf = actions_p[jn.j].result.str();
    rec.drug_action = actions_d[jn.i].describe();
    rec.protein_position = actions_p[jn.j].position;
    rec.quad = jn.quad;
    rec.breakdown = jn.breakdown;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace cfdta
