// Command-line front end. Subcommands:
//   run                    execute a configured counterfactual search
//   eval                   re-audit and summarize an existing records file
//   actions                list the one-step edit space of a molecule/sequence
//   oracle make-surrogate  write a seeded surrogate predictor spec
//   oracle query           score pairs with any oracle (one-shot or --stdin)
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 runtime error.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfdta/actionspace.hpp"
#include "cfdta/error.hpp"
#include "cfdta/harness.hpp"
#include "cfdta/marl.hpp"
#include "cfdta/metrics.hpp"
#include "cfdta/oracle.hpp"
#include "cfdta/smiles.hpp"

namespace {

using namespace cfdta;

int cmd_run(const std::string& config_path, const std::optional<std::string>& method,
            const std::optional<std::uint64_t>& seed, const std::optional<int>& episodes,
            const std::optional<int>& top_k, const std::optional<std::string>& out_dir) {
  RunConfig cfg = load_run_config(config_path);
  if (method) cfg.method = method_from_name(*method);
  if (seed) cfg.train.seed = *seed;
  if (episodes) cfg.train.episodes = *episodes;
  if (top_k) cfg.train.top_k = *top_k;
  if (out_dir) cfg.out_dir = *out_dir;
  validate_train_config(cfg.train);
  const RunResult result = run(cfg);
  std::cout << format_report_table({result.report});
  std::cout << "records: " << result.records_path << "\n";
  return 0;
}

int cmd_eval(const std::string& records_path, const std::string& oracle_spec, bool global_agg) {
  const EvalReport report = eval_records(
      records_path, oracle_spec,
      global_agg ? Aggregation::global : Aggregation::per_pair_then_global);
  std::cout << format_report_table({report});
  return 0;
}

int cmd_actions(const std::string& smiles, const std::string& sequence,
                const std::vector<std::string>& elements) {
  if (smiles.empty() && sequence.empty()) {
    throw ConfigError("actions: give --smiles and/or --sequence");
  }
  nlohmann::json out = nlohmann::json::object();
  if (!smiles.empty()) {
    std::vector<Element> admissible;
    for (const std::string& sym : elements) {
      auto el = element_from_symbol(sym);
      if (!el) throw ConfigError("actions: unknown element '" + sym + "'");
      admissible.push_back(*el);
    }
    const MolGraph g = parse_smiles(smiles);
    nlohmann::json list = nlohmann::json::array();
    for (const DrugAction& a : enumerate_drug_actions(g, admissible)) {
      list.push_back({{"edit", a.describe()}, {"result", write_smiles(a.result)}});
    }
    out["drug"] = std::move(list);
  }
  if (!sequence.empty()) {
    const ProteinSeq p(sequence);
    nlohmann::json list = nlohmann::json::array();
    for (const ProteinAction& a : enumerate_protein_actions(p)) {
      list.push_back({{"position", a.position},
                      {"from", std::string(1, p.str()[static_cast<std::size_t>(a.position)])},
                      {"result", a.result.str()},
                      {"beyond_encoder", a.beyond_encoder}});
    }
    out["protein"] = std::move(list);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

Interaction parse_interaction(const std::string& text) {
  // bit:window_start:residues:strength[:kind]
  std::vector<std::string> parts;
  std::string part;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(part);
      part.clear();
    } else {
      part += c;
    }
  }
  parts.push_back(part);
  if (parts.size() != 4 && parts.size() != 5) {
    throw ConfigError("interaction: expected bit:window_start:residues:strength[:kind]");
  }
  Interaction it;
  try {
    it.bit = std::stoi(parts[0]);
    it.window_start = std::stoi(parts[1]);
    it.window_residues = parts[2];
    it.strength = std::stod(parts[3]);
  } catch (const std::exception&) {
    throw ConfigError("interaction: bad numeric field in \"" + text + "\"");
  }
  if (parts.size() == 5) {
    if (parts[4] == "redundant") {
      it.kind = Interaction::Kind::redundant;
    } else if (parts[4] == "conjunctive") {
      it.kind = Interaction::Kind::conjunctive;
    } else {
      throw ConfigError("interaction: kind must be redundant or conjunctive");
    }
  }
  return it;
}

int cmd_make_surrogate(std::uint64_t seed, const std::string& out_path, double base,
                       double drug_scale, double protein_scale, int fp_radius, int fp_nbits,
                       int kmer_k, const std::vector<std::string>& interactions) {
  SurrogateSpec spec;
  spec.seed = seed;
  spec.base = base;
  spec.drug_weight_scale = drug_scale;
  spec.protein_weight_scale = protein_scale;
  spec.fp_radius = fp_radius;
  spec.fp_nbits = fp_nbits;
  spec.kmer_k = kmer_k;
  for (const std::string& text : interactions) spec.interactions.push_back(parse_interaction(text));
  SurrogateOracle validate(spec);  // constructor runs the full checks
  const std::string json_text = surrogate_spec_to_json(spec);
  if (out_path.empty() || out_path == "-") {
    std::cout << json_text;
    return 0;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw RuntimeError("cannot write \"" + out_path + "\"");
  out << json_text;
  return 0;
}

int cmd_oracle_query(const std::string& oracle_spec, const std::string& smiles,
                     const std::string& sequence, bool use_stdin) {
  const std::unique_ptr<AffinityOracle> oracle = load_oracle(oracle_spec);
  if (use_stdin) {
    // Serve the external-predictor line protocol: SMILES<TAB>SEQUENCE in,
    // one decimal out. Lets this binary stand in as someone else's model.
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line.empty()) continue;
      const std::size_t tab = line.find('\t');
      if (tab == std::string::npos) throw DataError("query: expected SMILES<TAB>SEQUENCE");
      const MolGraph d = parse_smiles(line.substr(0, tab));
      const ProteinSeq p(line.substr(tab + 1));
      std::cout << std::setprecision(17) << oracle->predict(d, p) << "\n" << std::flush;
    }
    return 0;
  }
  if (smiles.empty() || sequence.empty()) {
    throw ConfigError("query: give --smiles and --sequence, or --stdin");
  }
  const MolGraph d = parse_smiles(smiles);
  const ProteinSeq p(sequence);
  std::cout << std::setprecision(17) << oracle->predict(d, p) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint drug-protein counterfactual search against a black-box affinity predictor"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "execute a configured search");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "JSON run configuration")->required();
  std::optional<std::string> method_override;
  run_cmd->add_option("--method", method_override, "macda | mameg | jointlist");
  std::optional<std::uint64_t> seed_override;
  run_cmd->add_option("--seed", seed_override, "base RNG seed");
  std::optional<int> episodes_override;
  run_cmd->add_option("--episodes", episodes_override, "episodes per pair");
  std::optional<int> topk_override;
  run_cmd->add_option("--top-k", topk_override, "records kept per pair");
  std::optional<std::string> out_override;
  run_cmd->add_option("--out", out_override, "output directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "summarize an existing records file");
  std::string records_path;
  eval_cmd->add_option("--records", records_path, "records.jsonl path")->required();
  std::string eval_oracle;
  eval_cmd->add_option("--oracle", eval_oracle, "oracle spec for the full audit");
  bool global_agg = false;
  eval_cmd->add_flag("--global", global_agg, "single global mean instead of per-pair means");

  // actions
  auto* actions_cmd = app.add_subcommand("actions", "list one-step edits");
  std::string actions_smiles, actions_sequence;
  actions_cmd->add_option("--smiles", actions_smiles, "molecule to edit");
  actions_cmd->add_option("--sequence", actions_sequence, "protein to mutate");
  std::vector<std::string> actions_elements = {"C", "N", "O", "F"};
  actions_cmd->add_option("--elements", actions_elements, "admissible added atoms");

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "predictor utilities");
  oracle_cmd->require_subcommand(1);
  auto* make_cmd = oracle_cmd->add_subcommand("make-surrogate", "write a surrogate spec");
  std::uint64_t make_seed = 0;
  make_cmd->add_option("--seed", make_seed, "weight seed")->required();
  std::string make_out;
  make_cmd->add_option("--out", make_out, "output path (default stdout)");
  double make_base = 7.5, make_drug_scale = 0.02, make_protein_scale = 0.02;
  make_cmd->add_option("--base", make_base, "affinity offset");
  make_cmd->add_option("--drug-scale", make_drug_scale, "drug weight range");
  make_cmd->add_option("--protein-scale", make_protein_scale, "protein weight range");
  int make_radius = 2, make_nbits = 2048, make_kmer = 3;
  make_cmd->add_option("--fp-radius", make_radius, "fingerprint radius");
  make_cmd->add_option("--fp-nbits", make_nbits, "fingerprint width");
  make_cmd->add_option("--kmer-k", make_kmer, "protein k-mer length");
  std::vector<std::string> make_interactions;
  make_cmd->add_option("--interaction", make_interactions,
                       "planted term, bit:window_start:residues:strength[:kind]");

  auto* query_cmd = oracle_cmd->add_subcommand("query", "score drug-protein pairs");
  std::string query_oracle;
  query_cmd->add_option("--oracle", query_oracle, "oracle spec")->required();
  std::string query_smiles, query_sequence;
  query_cmd->add_option("--smiles", query_smiles, "drug SMILES");
  query_cmd->add_option("--sequence", query_sequence, "protein sequence");
  bool query_stdin = false;
  query_cmd->add_flag("--stdin", query_stdin, "serve SMILES<TAB>SEQUENCE lines from stdin");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return cmd_run(config_path, method_override, seed_override, episodes_override,
                     topk_override, out_override);
    }
    if (eval_cmd->parsed()) return cmd_eval(records_path, eval_oracle, global_agg);
    if (actions_cmd->parsed()) {
      return cmd_actions(actions_smiles, actions_sequence, actions_elements);
    }
    if (make_cmd->parsed()) {
      return cmd_make_surrogate(make_seed, make_out, make_base, make_drug_scale,
                                make_protein_scale, make_radius, make_nbits, make_kmer,
                                make_interactions);
    }
    if (query_cmd->parsed()) {
      return cmd_oracle_query(query_oracle, query_smiles, query_sequence, query_stdin);
    }
  } catch (const cfdta::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.category()) {
      case ErrorCategory::config: return 2;
      case ErrorCategory::data: return 3;
      case ErrorCategory::runtime: return 4;
    }
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
