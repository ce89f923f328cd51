#pragma once

// Dense networks small enough to train on a CPU in seconds: MLPs with Leaky
// ReLU hidden layers, masked softmax, a scaled dot-product attention head,
// exact reverse-mode gradients, and Adam/SGD steps over flat parameter
// vectors. Everything is deterministic given the init RNG and update order.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cfdta/rng.hpp"

namespace cfdta {

inline constexpr double kLeakySlope = 0.01;

inline double leaky_relu(double x) { return x >= 0.0 ? x : kLeakySlope * x; }
// Derivative taken as 1 at exactly 0. Zero pre-activations appear routinely
// (zero-initialized value transform), and the frozen-attention equivalence
// argument needs the derivative there to be the identity branch.
inline double leaky_relu_grad_from_output(double y) { return y >= 0.0 ? 1.0 : kLeakySlope; }

struct MlpCache {
  // acts[0] is the input batch; acts[l] the post-activation output of layer
  // l. Columns are samples.
  std::vector<Eigen::MatrixXd> acts;
};

struct MlpGrads {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
};

class Mlp {
 public:
  // sizes = {in, hidden..., out}; Xavier-uniform weights, zero biases. The
  // rng draw order (layer by layer, row-major within a weight matrix) is
  // pinned; changing it changes every seeded run.
  Mlp(std::vector<int> sizes, DetRng& rng);

  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(weights_.size()); }

  // Columns of x are samples. Hidden layers apply Leaky ReLU; the final
  // layer is linear.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, MlpCache* cache = nullptr) const;
  Eigen::VectorXd forward_vec(const Eigen::VectorXd& x) const;

  // dy is the upstream gradient at the output (same shape as forward's
  // result). Fills parameter gradients summed over the batch (callers
  // normalize) and returns the gradient w.r.t. the input batch.
  Eigen::MatrixXd backward(const MlpCache& cache, const Eigen::MatrixXd& dy,
                           MlpGrads* grads) const;

  int param_size() const;
  Eigen::VectorXd params_flat() const;
  void set_params_flat(const Eigen::VectorXd& flat);
  Eigen::VectorXd grads_flat(const MlpGrads& grads) const;

  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  std::vector<Eigen::MatrixXd>& mutable_weights() { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

// Masked softmax with max-subtraction. Masked entries are exactly 0 in the
// output; throws RuntimeError when everything is masked.
Eigen::VectorXd softmax_policy(const Eigen::VectorXd& logits, const std::vector<bool>& mask);
Eigen::VectorXd softmax_all(const Eigen::VectorXd& logits);

struct AttentionCache {
  Eigen::VectorXd g_self;
  std::vector<Eigen::VectorXd> g_others;
  Eigen::VectorXd scores;   // pre-softmax, already scaled
  Eigen::VectorXd weights;  // softmax(scores)
  std::vector<Eigen::VectorXd> transformed;  // leaky(value * g_j)
};

struct AttentionGrads {
  Eigen::MatrixXd dwq, dwk, dvalue;
  Eigen::VectorXd dg_self;
  std::vector<Eigen::VectorXd> dg_others;
};

// One head of scaled dot-product attention over the other agents' embeddings:
// out = sum_j softmax_j((wq g_self) . (wk g_j) / sqrt(attn_dim)) leaky(value g_j).
// With a single other agent the weight is exactly 1 and the queries/keys get
// zero gradient (softmax over one element is constant).
class AttentionHead {
 public:
  AttentionHead(int g_dim, int attn_dim, int value_dim, DetRng& rng);

  int g_dim() const { return static_cast<int>(wq_.cols()); }
  int value_dim() const { return static_cast<int>(value_.rows()); }

  Eigen::VectorXd mix(const Eigen::VectorXd& g_self, const std::vector<Eigen::VectorXd>& g_others,
                      AttentionCache* cache = nullptr) const;
  void backward(const AttentionCache& cache, const Eigen::VectorXd& dout,
                AttentionGrads* grads) const;

  // Zeroes the value transform so mix() returns leaky(0) = 0 for any input;
  // paired with excluding this head from the optimizer it turns the coupled
  // critic into the uncoupled one, update for update.
  void freeze_value_to_zero();

  int param_size() const;
  Eigen::VectorXd params_flat() const;
  void set_params_flat(const Eigen::VectorXd& flat);
  Eigen::VectorXd grads_flat(const AttentionGrads& grads) const;

  const Eigen::MatrixXd& value() const { return value_; }

 private:
  Eigen::MatrixXd wq_, wk_, value_;
};

class Optimizer {
 public:
  enum class Kind { adam, sgd };

  Optimizer(Kind kind, double lr);

  // Gradient-descent step (callers negate for ascent). Adam moments are
  // allocated on first use and keyed to the parameter size thereafter.
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  double lr() const { return lr_; }
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long step_count_ = 0;
  Eigen::VectorXd m_, v_;
};

// Checkpoint file: magic, little-endian u64 header length, JSON header
// listing {name, size} per tensor, then all values as little-endian f64 in
// header order.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Eigen::VectorXd>>& tensors);
std::vector<std::pair<std::string, Eigen::VectorXd>> load_checkpoint(const std::string& path);

}  // namespace cfdta
