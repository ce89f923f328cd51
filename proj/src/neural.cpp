#include "cfdta/neural.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "cfdta/error.hpp"

namespace cfdta {

namespace {

void xavier_fill(Eigen::MatrixXd& w, DetRng& rng) {
  const double a = std::sqrt(6.0 / (static_cast<double>(w.cols()) + static_cast<double>(w.rows())));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-a, a);
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> sizes, DetRng& rng) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ConfigError("mlp: need at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw ConfigError("mlp: layer sizes must be positive");
  }
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    Eigen::MatrixXd w(sizes_[l], sizes_[l - 1]);
    xavier_fill(w, rng);
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(sizes_[l]));
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, MlpCache* cache) const {
  if (x.rows() != in_dim()) {
    throw RuntimeError("mlp forward: input has " + std::to_string(x.rows()) +
                       " rows, expected " + std::to_string(in_dim()));
  }
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(x);
  }
  Eigen::MatrixXd a = x;
  const int last = layer_count() - 1;
  for (int l = 0; l <= last; ++l) {
    Eigen::MatrixXd z = (weights_[l] * a).colwise() + biases_[l];
    if (l < last) z = z.unaryExpr([](double v) { return leaky_relu(v); });
    a = std::move(z);
    if (cache) cache->acts.push_back(a);
  }
  return a;
}

Eigen::VectorXd Mlp::forward_vec(const Eigen::VectorXd& x) const { return forward(x); }

Eigen::MatrixXd Mlp::backward(const MlpCache& cache, const Eigen::MatrixXd& dy,
                              MlpGrads* grads) const {
  const int layers = layer_count();
  if (static_cast<int>(cache.acts.size()) != layers + 1) {
    throw RuntimeError("mlp backward: cache does not match network depth");
  }
  if (dy.rows() != out_dim() || dy.cols() != cache.acts.back().cols()) {
    throw RuntimeError("mlp backward: upstream gradient shape mismatch");
  }
  grads->dw.assign(layers, Eigen::MatrixXd());
  grads->db.assign(layers, Eigen::VectorXd());
  Eigen::MatrixXd delta = dy;
  for (int l = layers - 1; l >= 0; --l) {
    if (l < layers - 1) {
      // Hidden activation gradient recovered from the cached output sign.
      delta = delta.cwiseProduct(
          cache.acts[l + 1].unaryExpr([](double y) { return leaky_relu_grad_from_output(y); }));
    }
    grads->dw[l] = delta * cache.acts[l].transpose();
    grads->db[l] = delta.rowwise().sum();
    if (l > 0) delta = (weights_[l].transpose() * delta).eval();
  }
  return weights_[0].transpose() * delta;
}

int Mlp::param_size() const {
  int total = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    total += static_cast<int>(weights_[l].size() + biases_[l].size());
  }
  return total;
}

Eigen::VectorXd Mlp::params_flat() const {
  Eigen::VectorXd flat(param_size());
  int at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto wsize = weights_[l].size();
    flat.segment(at, wsize) = Eigen::Map<const Eigen::VectorXd>(weights_[l].data(), wsize);
    at += static_cast<int>(wsize);
    flat.segment(at, biases_[l].size()) = biases_[l];
    at += static_cast<int>(biases_[l].size());
  }
  return flat;
}

void Mlp::set_params_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != param_size()) throw RuntimeError("mlp: parameter vector size mismatch");
  int at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto wsize = weights_[l].size();
    Eigen::Map<Eigen::VectorXd>(weights_[l].data(), wsize) = flat.segment(at, wsize);
    at += static_cast<int>(wsize);
    biases_[l] = flat.segment(at, biases_[l].size());
    at += static_cast<int>(biases_[l].size());
  }
}

Eigen::VectorXd Mlp::grads_flat(const MlpGrads& grads) const {
  Eigen::VectorXd flat(param_size());
  int at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto wsize = grads.dw[l].size();
    flat.segment(at, wsize) = Eigen::Map<const Eigen::VectorXd>(grads.dw[l].data(), wsize);
    at += static_cast<int>(wsize);
    flat.segment(at, grads.db[l].size()) = grads.db[l];
    at += static_cast<int>(grads.db[l].size());
  }
  return flat;
}

Eigen::VectorXd softmax_policy(const Eigen::VectorXd& logits, const std::vector<bool>& mask) {
  if (static_cast<Eigen::Index>(mask.size()) != logits.size()) {
    throw RuntimeError("softmax: mask length mismatch");
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[i]) max_logit = std::max(max_logit, logits[i]);
  }
  if (!std::isfinite(max_logit)) throw RuntimeError("softmax: all entries masked");
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(logits.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    probs[i] = std::exp(logits[i] - max_logit);
    sum += probs[i];
  }
  probs /= sum;
  return probs;
}

Eigen::VectorXd softmax_all(const Eigen::VectorXd& logits) {
  return softmax_policy(logits, std::vector<bool>(logits.size(), true));
}

AttentionHead::AttentionHead(int g_dim, int attn_dim, int value_dim, DetRng& rng) {
  if (g_dim <= 0 || attn_dim <= 0 || value_dim <= 0) {
    throw ConfigError("attention: dimensions must be positive");
  }
  wq_.resize(attn_dim, g_dim);
  wk_.resize(attn_dim, g_dim);
  value_.resize(value_dim, g_dim);
  xavier_fill(wq_, rng);
  xavier_fill(wk_, rng);
  xavier_fill(value_, rng);
}

Eigen::VectorXd AttentionHead::mix(const Eigen::VectorXd& g_self,
                                   const std::vector<Eigen::VectorXd>& g_others,
                                   AttentionCache* cache) const {
  if (g_others.empty()) throw RuntimeError("attention: no other agents to attend over");
  if (g_self.size() != wq_.cols()) throw RuntimeError("attention: g_self dimension mismatch");
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq_.rows()));
  const Eigen::VectorXd q = wq_ * g_self;
  const int n = static_cast<int>(g_others.size());
  Eigen::VectorXd scores(n);
  std::vector<Eigen::VectorXd> transformed(n);
  for (int j = 0; j < n; ++j) {
    if (g_others[j].size() != wk_.cols()) {
      throw RuntimeError("attention: g_other dimension mismatch");
    }
    scores[j] = q.dot(wk_ * g_others[j]) * scale;
    transformed[j] =
        (value_ * g_others[j]).unaryExpr([](double v) { return leaky_relu(v); });
  }
  const Eigen::VectorXd weights = softmax_all(scores);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(value_.rows());
  for (int j = 0; j < n; ++j) out += weights[j] * transformed[j];
  if (cache) {
    cache->g_self = g_self;
    cache->g_others = g_others;
    cache->scores = scores;
    cache->weights = weights;
    cache->transformed = transformed;
  }
  return out;
}

void AttentionHead::backward(const AttentionCache& cache, const Eigen::VectorXd& dout,
                             AttentionGrads* grads) const {
  const int n = static_cast<int>(cache.g_others.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq_.rows()));
  grads->dwq = Eigen::MatrixXd::Zero(wq_.rows(), wq_.cols());
  grads->dwk = Eigen::MatrixXd::Zero(wk_.rows(), wk_.cols());
  grads->dvalue = Eigen::MatrixXd::Zero(value_.rows(), value_.cols());
  grads->dg_self = Eigen::VectorXd::Zero(cache.g_self.size());
  grads->dg_others.assign(n, Eigen::VectorXd());

  // Value path: out = sum_j w_j leaky(value g_j).
  Eigen::VectorXd dalpha(n);
  for (int j = 0; j < n; ++j) {
    dalpha[j] = dout.dot(cache.transformed[j]);
    Eigen::VectorXd du = (cache.weights[j] * dout).cwiseProduct(cache.transformed[j].unaryExpr(
        [](double y) { return leaky_relu_grad_from_output(y); }));
    grads->dvalue += du * cache.g_others[j].transpose();
    grads->dg_others[j] = value_.transpose() * du;
  }

  // Score path through the softmax Jacobian; vanishes when n == 1.
  const double mixed = cache.weights.dot(dalpha);
  const Eigen::VectorXd dscores =
      cache.weights.cwiseProduct(dalpha - Eigen::VectorXd::Constant(n, mixed));
  const Eigen::VectorXd q = wq_ * cache.g_self;
  Eigen::VectorXd dq = Eigen::VectorXd::Zero(q.size());
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd k = wk_ * cache.g_others[j];
    dq += dscores[j] * scale * k;
    const Eigen::VectorXd dk = dscores[j] * scale * q;
    grads->dwk += dk * cache.g_others[j].transpose();
    grads->dg_others[j] += wk_.transpose() * dk;
  }
  grads->dwq += dq * cache.g_self.transpose();
  grads->dg_self += wq_.transpose() * dq;
}

void AttentionHead::freeze_value_to_zero() { value_.setZero(); }

int AttentionHead::param_size() const {
  return static_cast<int>(wq_.size() + wk_.size() + value_.size());
}

Eigen::VectorXd AttentionHead::params_flat() const {
  Eigen::VectorXd flat(param_size());
  int at = 0;
  for (const Eigen::MatrixXd* m : {&wq_, &wk_, &value_}) {
    flat.segment(at, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
    at += static_cast<int>(m->size());
  }
  return flat;
}

void AttentionHead::set_params_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != param_size()) throw RuntimeError("attention: parameter size mismatch");
  int at = 0;
  for (Eigen::MatrixXd* m : {&wq_, &wk_, &value_}) {
    Eigen::Map<Eigen::VectorXd>(m->data(), m->size()) = flat.segment(at, m->size());
    at += static_cast<int>(m->size());
  }
}

Eigen::VectorXd AttentionHead::grads_flat(const AttentionGrads& grads) const {
  Eigen::VectorXd flat(param_size());
  int at = 0;
  for (const Eigen::MatrixXd* m : {&grads.dwq, &grads.dwk, &grads.dvalue}) {
    flat.segment(at, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
    at += static_cast<int>(m->size());
  }
  return flat;
}

Optimizer::Optimizer(Kind kind, double lr) : kind_(kind), lr_(lr) {
  if (lr <= 0.0) throw ConfigError("optimizer: learning rate must be positive");
}

void Optimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != grad.size()) throw RuntimeError("optimizer: size mismatch");
  if (kind_ == Kind::sgd) {
    params -= lr_ * grad;
    return;
  }
  if (m_.size() == 0) {
    m_ = Eigen::VectorXd::Zero(params.size());
    v_ = Eigen::VectorXd::Zero(params.size());
  } else if (m_.size() != params.size()) {
    throw RuntimeError("optimizer: parameter size changed between steps");
  }
  ++step_count_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  params.array() -=
      lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

namespace {
constexpr char kCheckpointMagic[8] = {'C', 'F', 'N', 'N', '0', '1', '\r', '\n'};
}

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Eigen::VectorXd>>& tensors) {
  nlohmann::json header;
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, values] : tensors) {
    header["tensors"].push_back({{"name", name}, {"size", values.size()}});
  }
  const std::string header_text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("checkpoint: cannot write \"" + path + "\"");
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  std::uint64_t len = header_text.size();
  char lenbuf[8];
  for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((len >> (8 * i)) & 0xff);
  out.write(lenbuf, 8);
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& [name, values] : tensors) {
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * 8));
  }
  if (!out) throw RuntimeError("checkpoint: write to \"" + path + "\" failed");
}

std::vector<std::pair<std::string, Eigen::VectorXd>> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open \"" + path + "\"");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw DataError("checkpoint: bad magic in \"" + path + "\"");
  }
  char lenbuf[8];
  in.read(lenbuf, 8);
  if (!in) throw DataError("checkpoint: truncated header length");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) {
    len |= static_cast<std::uint64_t>(static_cast<unsigned char>(lenbuf[i])) << (8 * i);
  }
  if (len > (1u << 20)) throw DataError("checkpoint: implausible header size");
  std::string header_text(len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad header: ") + e.what());
  }
  std::vector<std::pair<std::string, Eigen::VectorXd>> tensors;
  for (const nlohmann::json& t : header.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const Eigen::Index size = t.at("size").get<Eigen::Index>();
    if (size < 0) throw DataError("checkpoint: negative tensor size");
    Eigen::VectorXd values(size);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(size * 8));
    if (!in) throw DataError("checkpoint: truncated payload for \"" + name + "\"");
    tensors.emplace_back(name, std::move(values));
  }
  return tensors;
}

}  // namespace cfdta
