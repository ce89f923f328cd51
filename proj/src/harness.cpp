#include "cfdta/harness.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "cfdta/error.hpp"
#include "cfdta/rng.hpp"
#include "cfdta/smiles.hpp"

namespace cfdta {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
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

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write \"" + tmp + "\"");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw RuntimeError("write to \"" + tmp + "\" failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw RuntimeError("rename to \"" + path + "\" failed: " + ec.message());
}

}  // namespace

void log_line(const std::string& message) {
  const char* level = std::getenv("CFDTA_LOG");
  if (level && std::string(level) == "quiet") return;
  std::cerr << message << "\n";
}

std::vector<DatasetRow> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("dataset: cannot open \"" + path + "\"");
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset \"" + path + "\": no rows");
  {
    const std::vector<std::string> header = split_csv_line(line);
    const std::vector<std::string> expected = {"drug_id", "smiles", "protein_id", "sequence",
                                               "pkd"};
    if (header != expected) {
      throw DataError("dataset \"" + path +
                      "\": header must be drug_id,smiles,protein_id,sequence,pkd");
    }
  }
  std::vector<DatasetRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_csv_line(line);
    const std::string where = "dataset \"" + path + "\" line " + std::to_string(line_no);
    if (fields.size() != 5) {
      throw DataError(where + ": expected 5 fields, got " + std::to_string(fields.size()));
    }
    DatasetRow row;
    row.drug_id = fields[0];
    row.smiles = fields[1];
    row.protein_id = fields[2];
    row.sequence = fields[3];
    if (row.drug_id.empty() || row.protein_id.empty()) {
      throw DataError(where + ": empty id field");
    }
    try {
      parse_smiles(row.smiles);
      ProteinSeq validate(row.sequence);
    } catch (const Error& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!fields[4].empty()) {
      char* end = nullptr;
      const double pkd = std::strtod(fields[4].c_str(), &end);
      if (end != fields[4].c_str() + fields[4].size()) {
        throw DataError(where + ": bad affinity value \"" + fields[4] + "\"");
      }
      row.pkd = pkd;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("dataset \"" + path + "\": no rows");
  return rows;
}

namespace {

TrainConfig train_config_from_json_value(const json& j) {
  reject_unknown_keys(j,
                      {"gamma", "batch_size", "policy_lr", "critic_lr", "episodes", "seed",
                       "weights", "sign_scope", "update_every", "hidden", "embed_dim", "attn_dim",
                       "obs_fp_radius", "obs_fp_nbits", "temperature", "top_k", "admissible",
                       "jointlist_signed", "freeze_attention", "use_sgd", "allow_beyond_encoder"},
                      "train config");
  TrainConfig cfg;
  try {
    if (j.contains("gamma")) cfg.gamma = j.at("gamma").get<double>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
    if (j.contains("policy_lr")) cfg.policy_lr = j.at("policy_lr").get<double>();
    if (j.contains("critic_lr")) cfg.critic_lr = j.at("critic_lr").get<double>();
    if (j.contains("episodes")) cfg.episodes = j.at("episodes").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("weights")) {
      const json& w = j.at("weights");
      reject_unknown_keys(w, {"alpha_r", "alpha_d", "alpha_p"}, "reward weights");
      if (w.contains("alpha_r")) cfg.weights.alpha_r = w.at("alpha_r").get<double>();
      if (w.contains("alpha_d")) cfg.weights.alpha_d = w.at("alpha_d").get<double>();
      if (w.contains("alpha_p")) cfg.weights.alpha_p = w.at("alpha_p").get<double>();
    }
    if (j.contains("sign_scope")) {
      const std::string scope = j.at("sign_scope").get<std::string>();
      if (scope == "first_term") {
        cfg.sign_scope = SignScope::first_term;
      } else if (scope == "all_terms") {
        cfg.sign_scope = SignScope::all_terms;
      } else {
        throw ConfigError("train config: sign_scope must be first_term or all_terms");
      }
    }
    if (j.contains("update_every")) cfg.update_every = j.at("update_every").get<int>();
    if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<std::vector<int>>();
    if (j.contains("embed_dim")) cfg.embed_dim = j.at("embed_dim").get<int>();
    if (j.contains("attn_dim")) cfg.attn_dim = j.at("attn_dim").get<int>();
    if (j.contains("obs_fp_radius")) cfg.obs_fp_radius = j.at("obs_fp_radius").get<int>();
    if (j.contains("obs_fp_nbits")) cfg.obs_fp_nbits = j.at("obs_fp_nbits").get<int>();
    if (j.contains("temperature")) cfg.temperature = j.at("temperature").get<double>();
    if (j.contains("top_k")) cfg.top_k = j.at("top_k").get<int>();
    if (j.contains("admissible")) {
      cfg.admissible.clear();
      for (const json& sym : j.at("admissible")) {
        const std::string s = sym.get<std::string>();
        auto el = element_from_symbol(s);
        if (!el) throw ConfigError("train config: unknown admissible element '" + s + "'");
        cfg.admissible.push_back(*el);
      }
    }
    if (j.contains("jointlist_signed")) {
      cfg.jointlist_signed = j.at("jointlist_signed").get<bool>();
    }
    if (j.contains("freeze_attention")) {
      cfg.freeze_attention = j.at("freeze_attention").get<bool>();
    }
    if (j.contains("use_sgd")) cfg.use_sgd = j.at("use_sgd").get<bool>();
    if (j.contains("allow_beyond_encoder")) {
      cfg.allow_beyond_encoder = j.at("allow_beyond_encoder").get<bool>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  validate_train_config(cfg);
  return cfg;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("run config: expected a JSON object");
  reject_unknown_keys(
      j, {"dataset", "drugs", "protein", "oracle", "method", "out", "aggregation", "train"},
      "run config");
  RunConfig cfg;
  try {
    if (!j.contains("dataset")) throw ConfigError("run config: \"dataset\" is required");
    cfg.dataset = j.at("dataset").get<std::string>();
    if (!j.contains("oracle")) throw ConfigError("run config: \"oracle\" is required");
    cfg.oracle = j.at("oracle").get<std::string>();
    if (j.contains("drugs")) cfg.drugs = j.at("drugs").get<std::vector<std::string>>();
    if (j.contains("protein")) cfg.protein = j.at("protein").get<std::string>();
    if (j.contains("method")) cfg.method = method_from_name(j.at("method").get<std::string>());
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    if (j.contains("aggregation")) {
      const std::string agg = j.at("aggregation").get<std::string>();
      if (agg == "per_pair_then_global") {
        cfg.aggregation = Aggregation::per_pair_then_global;
      } else if (agg == "global") {
        cfg.aggregation = Aggregation::global;
      } else {
        throw ConfigError("run config: aggregation must be per_pair_then_global or global");
      }
    }
    if (j.contains("train")) cfg.train = train_config_from_json_value(j.at("train"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("run config: cannot open \"" + path + "\"");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return run_config_from_json(buffer.str());
}

namespace {

struct PairSpec {
  std::string drug_id;
  std::string smiles;
  std::string protein_id;
  std::string sequence;
};

std::vector<PairSpec> select_pairs(const RunConfig& cfg, const std::vector<DatasetRow>& rows) {
  auto row_for_drug = [&](const std::string& id) -> const DatasetRow& {
    for (const DatasetRow& r : rows) {
      if (r.drug_id == id) return r;
    }
    throw ConfigError("run config: drug id \"" + id + "\" not in dataset");
  };
  std::vector<PairSpec> pairs;
  if (!cfg.protein.empty()) {
    const DatasetRow* protein_row = nullptr;
    for (const DatasetRow& r : rows) {
      if (r.protein_id == cfg.protein) {
        protein_row = &r;
        break;
      }
    }
    if (!protein_row) {
      throw ConfigError("run config: protein id \"" + cfg.protein + "\" not in dataset");
    }
    std::vector<std::string> drug_ids = cfg.drugs;
    if (drug_ids.empty()) {
      for (const DatasetRow& r : rows) {
        bool seen = false;
        for (const std::string& id : drug_ids) seen = seen || id == r.drug_id;
        if (!seen) drug_ids.push_back(r.drug_id);
      }
    }
    for (const std::string& id : drug_ids) {
      const DatasetRow& r = row_for_drug(id);
      pairs.push_back({r.drug_id, r.smiles, protein_row->protein_id, protein_row->sequence});
    }
    return pairs;
  }
  for (const DatasetRow& r : rows) {
    if (!cfg.drugs.empty()) {
      bool wanted = false;
      for (const std::string& id : cfg.drugs) wanted = wanted || id == r.drug_id;
      if (!wanted) continue;
    }
    pairs.push_back({r.drug_id, r.smiles, r.protein_id, r.sequence});
  }
  if (pairs.empty()) throw ConfigError("run config: pair selector matched nothing");
  return pairs;
}

}  // namespace

RunResult run(const RunConfig& cfg) {
  const std::vector<DatasetRow> rows = load_dataset(cfg.dataset);
  const std::vector<PairSpec> pairs = select_pairs(cfg, rows);
  const std::unique_ptr<AffinityOracle> oracle = load_oracle(cfg.oracle);

  std::vector<CounterfactualRecord> all_records;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PairSpec& pair = pairs[i];
    log_line("pair " + std::to_string(i + 1) + "/" + std::to_string(pairs.size()) + ": " +
             pair.drug_id + " x " + pair.protein_id + " (" + method_name(cfg.method) + ")");
    const MolGraph drug = parse_smiles(pair.smiles);
    const ProteinSeq protein(pair.sequence);
    TrainConfig tc = cfg.train;
    tc.seed = mix64(cfg.train.seed ^ mix64(static_cast<std::uint64_t>(i)));
    std::vector<CounterfactualRecord> records;
    switch (cfg.method) {
      case Method::macda: records = train_macda(drug, protein, *oracle, tc); break;
      case Method::mameg: records = train_mameg(drug, protein, *oracle, tc); break;
      case Method::jointlist: records = joint_list_baseline(drug, protein, *oracle, tc); break;
    }
    for (CounterfactualRecord& r : records) r.pair_index = static_cast<int>(i);
    all_records.insert(all_records.end(), records.begin(), records.end());
  }
  if (all_records.empty()) throw DataError("run: no records harvested (episodes = 0?)");

  const EvalReport report = evaluate(all_records, oracle.get(), cfg.aggregation);

  std::filesystem::create_directories(cfg.out_dir);
  RunResult result;
  result.report = report;
  result.pairs = static_cast<int>(pairs.size());
  result.records_path = cfg.out_dir + "/records.jsonl";
  result.report_json_path = cfg.out_dir + "/report.json";
  result.report_txt_path = cfg.out_dir + "/report.txt";
  result.mutations_path = cfg.out_dir + "/mutations.csv";

  std::string lines;
  for (const CounterfactualRecord& r : all_records) {
    lines += record_to_json(r);
    lines += "\n";
  }
  write_file_atomic(result.records_path, lines);
  write_file_atomic(result.report_json_path, report_to_json(report));
  write_file_atomic(result.report_txt_path, format_report_table({report}));
  write_file_atomic(result.mutations_path,
                    mutation_histogram_csv(mutation_histogram(all_records)));
  return result;
}

std::vector<CounterfactualRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("records: cannot open \"" + path + "\"");
  std::vector<CounterfactualRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(line));
    } catch (const Error& e) {
      throw DataError("records \"" + path + "\" line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  if (records.empty()) throw DataError("records \"" + path + "\": no records");
  return records;
}

EvalReport eval_records(const std::string& records_path, const std::string& oracle_spec,
                        Aggregation agg) {
  const std::vector<CounterfactualRecord> records = load_records(records_path);
  if (oracle_spec.empty()) return evaluate(records, nullptr, agg);
  const std::unique_ptr<AffinityOracle> oracle = load_oracle(oracle_spec);
  return evaluate(records, oracle.get(), agg);
}

}  // namespace cfdta
