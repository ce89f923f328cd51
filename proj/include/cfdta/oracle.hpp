#pragma once

// Black-box affinity predictors. The built-in surrogate is a seeded linear
// model over drug fingerprint bits and protein 3-mer counts plus optional
// planted bit-window interaction terms; it exists so that search behavior
// can be tested against closed-form ground truth. External predictors plug
// in through a line-oriented subprocess protocol.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cfdta/molgraph.hpp"
#include "cfdta/protein.hpp"

namespace cfdta {

class AffinityOracle {
 public:
  virtual ~AffinityOracle() = default;

  // Predicted binding affinity on the pKd scale.
  virtual double predict(const MolGraph& drug, const ProteinSeq& protein) const = 0;

  // Feature vectors backing the similarity terms.
  virtual Eigen::VectorXd encode_drug(const MolGraph& drug) const = 0;
  virtual Eigen::VectorXd encode_protein(const ProteinSeq& protein) const = 0;
};

// Two zero vectors are identical (1.0); one zero vector is maximally
// dissimilar to a nonzero one (0.0). Throws RuntimeError on length mismatch.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Counts of length-k windows over the first kEncodedProteinLength residues;
// dimension 20^k.
Eigen::VectorXd kmer_counts(const ProteinSeq& p, int k);

struct Interaction {
  // redundant: term active while the bit is present OR the window is
  // intact; only the joint edit removes it. conjunctive: active only while
  // both hold, so either single edit removes it.
  enum class Kind { redundant, conjunctive };

  int bit = 0;
  int window_start = 0;
  std::string window_residues;  // reference residues captured at plant time
  double strength = 0.0;
  Kind kind = Kind::redundant;
};

struct SurrogateSpec {
  std::uint64_t seed = 0;
  double base = 7.5;
  double drug_weight_scale = 0.02;
  double protein_weight_scale = 0.02;
  int fp_radius = 2;
  int fp_nbits = 2048;
  int kmer_k = 3;
  double clamp_lo = 0.0;
  double clamp_hi = 15.0;
  std::vector<Interaction> interactions;
};

// Round-trips bit-exactly: weights are regenerated from the seed, only the
// interactions are spelled out.
std::string surrogate_spec_to_json(const SurrogateSpec& spec);
SurrogateSpec surrogate_spec_from_json(const std::string& text);

class SurrogateOracle : public AffinityOracle {
 public:
  explicit SurrogateOracle(SurrogateSpec spec);

  double predict(const MolGraph& drug, const ProteinSeq& protein) const override;
  Eigen::VectorXd encode_drug(const MolGraph& drug) const override;
  Eigen::VectorXd encode_protein(const ProteinSeq& protein) const override;

  const SurrogateSpec& spec() const { return spec_; }
  const Eigen::VectorXd& drug_weights() const { return drug_weights_; }
  const Eigen::VectorXd& protein_weights() const { return protein_weights_; }
  bool window_intact(const Interaction& it, const ProteinSeq& p) const;

 private:
  SurrogateSpec spec_;
  Eigen::VectorXd drug_weights_;
  Eigen::VectorXd protein_weights_;
};

// Adapter for an external predictor process. Protocol, one exchange per
// prediction: request "SMILES<TAB>SEQUENCE\n", response: one decimal real
// per line. Encoders fall back to fingerprint / k-mer features since the
// external model's own representation is unavailable.
class SubprocessOracle : public AffinityOracle {
 public:
  explicit SubprocessOracle(std::vector<std::string> argv, int fp_radius = 2,
                            int fp_nbits = 2048, int kmer_k = 3);
  ~SubprocessOracle() override;

  SubprocessOracle(const SubprocessOracle&) = delete;
  SubprocessOracle& operator=(const SubprocessOracle&) = delete;

  double predict(const MolGraph& drug, const ProteinSeq& protein) const override;
  Eigen::VectorXd encode_drug(const MolGraph& drug) const override;
  Eigen::VectorXd encode_protein(const ProteinSeq& protein) const override;

 private:
  std::vector<std::string> argv_;
  int fp_radius_, fp_nbits_, kmer_k_;
  int child_pid_ = -1;
  int to_child_ = -1;
  mutable int from_child_ = -1;
  mutable std::string rx_buffer_;

  void spawn();
};

// "surrogate:SEED" or a path to a JSON oracle spec ({"kind":"surrogate",...}
// or {"kind":"external","command":[...]}).
std::unique_ptr<AffinityOracle> load_oracle(const std::string& spec_string);

}  // namespace cfdta
