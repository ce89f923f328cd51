#include "cfdta/oracle.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfdta/error.hpp"
#include "cfdta/rng.hpp"
#include "cfdta/smiles.hpp"

namespace cfdta {

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw RuntimeError("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                       " vs " + std::to_string(b.size()) + ")");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  // Identical vectors must score exactly 1.0; the norm product below can be
  // an ulp off for them.
  if (a.cwiseEqual(b).all()) return 1.0;
  return a.dot(b) / (na * nb);
}

Eigen::VectorXd kmer_counts(const ProteinSeq& p, int k) {
  if (k < 1 || k > 4) throw ConfigError("kmer_counts: k must be in [1, 4]");
  long dim = 1;
  for (int i = 0; i < k; ++i) dim *= 20;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(dim);
  const int limit = std::min<int>(static_cast<int>(p.size()), kEncodedProteinLength);
  for (int i = 0; i + k <= limit; ++i) {
    long idx = 0;
    for (int j = 0; j < k; ++j) idx = idx * 20 + (residue_code(p.str()[i + j]) - 1);
    counts[idx] += 1.0;
  }
  return counts;
}

namespace {

void validate_spec(const SurrogateSpec& spec) {
  if (spec.fp_nbits <= 0) throw ConfigError("surrogate: fp_nbits must be positive");
  if (spec.fp_radius < 0) throw ConfigError("surrogate: fp_radius must be non-negative");
  if (spec.kmer_k < 1 || spec.kmer_k > 4) throw ConfigError("surrogate: kmer_k must be in [1, 4]");
  if (spec.clamp_lo > spec.clamp_hi) throw ConfigError("surrogate: clamp_lo exceeds clamp_hi");
  if (spec.drug_weight_scale < 0.0 || spec.protein_weight_scale < 0.0) {
    throw ConfigError("surrogate: weight scales must be non-negative");
  }
  for (const Interaction& it : spec.interactions) {
    if (it.bit < 0 || it.bit >= spec.fp_nbits) {
      throw ConfigError("surrogate: interaction bit " + std::to_string(it.bit) +
                        " outside [0, " + std::to_string(spec.fp_nbits) + ")");
    }
    if (it.window_start < 0) throw ConfigError("surrogate: negative window_start");
    if (it.window_residues.empty()) throw ConfigError("surrogate: empty window_residues");
    for (char c : it.window_residues) {
      if (!is_amino_acid(c)) {
        throw ConfigError("surrogate: window_residues contains non-residue character");
      }
    }
  }
}

}  // namespace

SurrogateOracle::SurrogateOracle(SurrogateSpec spec) : spec_(std::move(spec)) {
  validate_spec(spec_);
  DetRng rng(spec_.seed);
  // Drug weights are drawn before protein weights; reordering would silently
  // change every prediction for a given seed.
  drug_weights_.resize(spec_.fp_nbits);
  for (int i = 0; i < spec_.fp_nbits; ++i) {
    drug_weights_[i] = rng.uniform(-spec_.drug_weight_scale, spec_.drug_weight_scale);
  }
  long kdim = 1;
  for (int i = 0; i < spec_.kmer_k; ++i) kdim *= 20;
  protein_weights_.resize(kdim);
  for (long i = 0; i < kdim; ++i) {
    protein_weights_[i] = rng.uniform(-spec_.protein_weight_scale, spec_.protein_weight_scale);
  }
}

bool SurrogateOracle::window_intact(const Interaction& it, const ProteinSeq& p) const {
  for (std::size_t j = 0; j < it.window_residues.size(); ++j) {
    const std::size_t pos = static_cast<std::size_t>(it.window_start) + j;
    if (pos >= static_cast<std::size_t>(p.size()) || p.str()[pos] != it.window_residues[j]) {
      return false;
    }
  }
  return true;
}

double SurrogateOracle::predict(const MolGraph& drug, const ProteinSeq& protein) const {
  const Fingerprint fp = compute_fingerprint(drug, spec_.fp_radius, spec_.fp_nbits);
  double sum = spec_.base;
  for (int bit : fp.set_bits()) sum += drug_weights_[bit];
  sum += protein_weights_.dot(kmer_counts(protein, spec_.kmer_k));
  for (const Interaction& it : spec_.interactions) {
    const bool bit = fp.test(it.bit);
    const bool hit = window_intact(it, protein);
    const bool active = it.kind == Interaction::Kind::redundant ? (bit || hit) : (bit && hit);
    if (active) sum += it.strength;
  }
  return std::clamp(sum, spec_.clamp_lo, spec_.clamp_hi);
}

Eigen::VectorXd SurrogateOracle::encode_drug(const MolGraph& drug) const {
  return compute_fingerprint(drug, spec_.fp_radius, spec_.fp_nbits).to_vector();
}

Eigen::VectorXd SurrogateOracle::encode_protein(const ProteinSeq& protein) const {
  return kmer_counts(protein, spec_.kmer_k);
}

namespace {

using nlohmann::json;

const char* kind_name(Interaction::Kind k) {
  return k == Interaction::Kind::redundant ? "redundant" : "conjunctive";
}

Interaction::Kind kind_from_name(const std::string& s) {
  if (s == "redundant") return Interaction::Kind::redundant;
  if (s == "conjunctive") return Interaction::Kind::conjunctive;
  throw ConfigError("surrogate: unknown interaction kind \"" + s + "\"");
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const char* where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) {
      throw ConfigError(std::string(where) + ": unknown key \"" + item.key() + "\"");
    }
  }
}

json spec_to_json_value(const SurrogateSpec& spec) {
  json j;
  j["kind"] = "surrogate";
  j["seed"] = spec.seed;
  j["base"] = spec.base;
  j["drug_weight_scale"] = spec.drug_weight_scale;
  j["protein_weight_scale"] = spec.protein_weight_scale;
  j["fp_radius"] = spec.fp_radius;
  j["fp_nbits"] = spec.fp_nbits;
  j["kmer_k"] = spec.kmer_k;
  j["clamp"] = {spec.clamp_lo, spec.clamp_hi};
  j["interactions"] = json::array();
  for (const Interaction& it : spec.interactions) {
    j["interactions"].push_back({{"bit", it.bit},
                                 {"window_start", it.window_start},
                                 {"window_residues", it.window_residues},
                                 {"strength", it.strength},
                                 {"kind", kind_name(it.kind)}});
  }
  return j;
}

SurrogateSpec spec_from_json_value(const json& j) {
  if (!j.is_object()) throw ConfigError("surrogate spec: expected a JSON object");
  reject_unknown_keys(j,
                      {"kind", "seed", "base", "drug_weight_scale", "protein_weight_scale",
                       "fp_radius", "fp_nbits", "kmer_k", "clamp", "interactions"},
                      "surrogate spec");
  if (j.contains("kind") && j.at("kind") != "surrogate") {
    throw ConfigError("surrogate spec: kind must be \"surrogate\"");
  }
  SurrogateSpec spec;
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("base")) spec.base = j.at("base").get<double>();
  if (j.contains("drug_weight_scale")) {
    spec.drug_weight_scale = j.at("drug_weight_scale").get<double>();
  }
  if (j.contains("protein_weight_scale")) {
    spec.protein_weight_scale = j.at("protein_weight_scale").get<double>();
  }
  if (j.contains("fp_radius")) spec.fp_radius = j.at("fp_radius").get<int>();
  if (j.contains("fp_nbits")) spec.fp_nbits = j.at("fp_nbits").get<int>();
  if (j.contains("kmer_k")) spec.kmer_k = j.at("kmer_k").get<int>();
  if (j.contains("clamp")) {
    const json& c = j.at("clamp");
    if (!c.is_array() || c.size() != 2) throw ConfigError("surrogate spec: clamp must be [lo, hi]");
    spec.clamp_lo = c[0].get<double>();
    spec.clamp_hi = c[1].get<double>();
  }
  if (j.contains("interactions")) {
    for (const json& ji : j.at("interactions")) {
      reject_unknown_keys(ji, {"bit", "window_start", "window_residues", "strength", "kind"},
                          "surrogate interaction");
      Interaction it;
      it.bit = ji.at("bit").get<int>();
      it.window_start = ji.at("window_start").get<int>();
      it.window_residues = ji.at("window_residues").get<std::string>();
      it.strength = ji.at("strength").get<double>();
      if (ji.contains("kind")) it.kind = kind_from_name(ji.at("kind").get<std::string>());
      spec.interactions.push_back(std::move(it));
    }
  }
  return spec;
}

}  // namespace

std::string surrogate_spec_to_json(const SurrogateSpec& spec) {
  return spec_to_json_value(spec).dump(2) + "\n";
}

SurrogateSpec surrogate_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("surrogate spec: ") + e.what());
  }
  return spec_from_json_value(j);
}

SubprocessOracle::SubprocessOracle(std::vector<std::string> argv, int fp_radius, int fp_nbits,
                                   int kmer_k)
    : argv_(std::move(argv)), fp_radius_(fp_radius), fp_nbits_(fp_nbits), kmer_k_(kmer_k) {
  if (argv_.empty()) throw ConfigError("external oracle: empty command");
  spawn();
}

void SubprocessOracle::spawn() {
  // A dead child must surface as a read/write error, not kill this process.
  ::signal(SIGPIPE, SIG_IGN);
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
    throw RuntimeError("external oracle: pipe() failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw RuntimeError("external oracle: fork() failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    std::vector<char*> cargv;
    cargv.reserve(argv_.size() + 1);
    for (std::string& arg : argv_) cargv.push_back(arg.data());
    cargv.push_back(nullptr);
    ::execvp(cargv[0], cargv.data());
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  child_pid_ = pid;
  to_child_ = to_child[1];
  from_child_ = from_child[0];
}

SubprocessOracle::~SubprocessOracle() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (child_pid_ > 0) {
    int status = 0;
    ::waitpid(child_pid_, &status, 0);
  }
}

double SubprocessOracle::predict(const MolGraph& drug, const ProteinSeq& protein) const {
  const std::string request = write_smiles(drug) + "\t" + protein.str() + "\n";
  std::size_t written = 0;
  while (written < request.size()) {
    const ssize_t n = ::write(to_child_, request.data() + written, request.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw RuntimeError("external oracle: write failed (predictor exited?)");
    }
    written += static_cast<std::size_t>(n);
  }
  std::string line;
  for (;;) {
    const std::size_t nl = rx_buffer_.find('\n');
    if (nl != std::string::npos) {
      line = rx_buffer_.substr(0, nl);
      rx_buffer_.erase(0, nl + 1);
      break;
    }
    char chunk[256];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw RuntimeError("external oracle: read failed");
    }
    if (n == 0) throw RuntimeError("external oracle: predictor closed its output");
    rx_buffer_.append(chunk, static_cast<std::size_t>(n));
  }
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(line.c_str(), &end);
  while (end && (*end == ' ' || *end == '\r' || *end == '\t')) ++end;
  if (errno != 0 || end == line.c_str() || (end && *end != '\0') || !std::isfinite(value)) {
    throw RuntimeError("external oracle: unparseable response \"" + line + "\"");
  }
  return value;
}

Eigen::VectorXd SubprocessOracle::encode_drug(const MolGraph& drug) const {
  return compute_fingerprint(drug, fp_radius_, fp_nbits_).to_vector();
}

Eigen::VectorXd SubprocessOracle::encode_protein(const ProteinSeq& protein) const {
  return kmer_counts(protein, kmer_k_);
}

std::unique_ptr<AffinityOracle> load_oracle(const std::string& spec_string) {
  constexpr const char* kPrefix = "surrogate:";
  if (spec_string.rfind(kPrefix, 0) == 0) {
    const std::string digits = spec_string.substr(std::strlen(kPrefix));
    if (digits.empty()) throw ConfigError("oracle: missing seed after \"surrogate:\"");
    char* end = nullptr;
    errno = 0;
    const std::uint64_t seed = std::strtoull(digits.c_str(), &end, 10);
    if (errno != 0 || *end != '\0') {
      throw ConfigError("oracle: bad seed \"" + digits + "\"");
    }
    SurrogateSpec spec;
    spec.seed = seed;
    return std::make_unique<SurrogateOracle>(std::move(spec));
  }
  std::ifstream in(spec_string);
  if (!in) throw ConfigError("oracle: cannot open \"" + spec_string + "\"");
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::exception& e) {
    throw ConfigError("oracle \"" + spec_string + "\": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("oracle: expected a JSON object");
  const std::string kind = j.value("kind", "surrogate");
  if (kind == "surrogate") {
    return std::make_unique<SurrogateOracle>(spec_from_json_value(j));
  }
  if (kind == "external") {
    reject_unknown_keys(j, {"kind", "command", "fp_radius", "fp_nbits", "kmer_k"},
                        "external oracle");
    if (!j.contains("command") || !j.at("command").is_array() || j.at("command").empty()) {
      throw ConfigError("external oracle: \"command\" must be a nonempty array");
    }
    std::vector<std::string> argv;
    for (const json& arg : j.at("command")) argv.push_back(arg.get<std::string>());
    return std::make_unique<SubprocessOracle>(std::move(argv), j.value("fp_radius", 2),
                                              j.value("fp_nbits", 2048), j.value("kmer_k", 3));
  }
  throw ConfigError("oracle: unknown kind \"" + kind + "\"");
}

}  // namespace cfdta
