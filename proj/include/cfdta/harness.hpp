#pragma once

// Run orchestration: dataset ingestion, JSON run configuration, method
// dispatch per (drug, protein) pair, and report emission. Everything the
// CLI does goes through these calls.

#include <optional>
#include <string>
#include <vector>

#include "cfdta/marl.hpp"
#include "cfdta/metrics.hpp"

namespace cfdta {

struct DatasetRow {
  std::string drug_id;
  std::string smiles;
  std::string protein_id;
  std::string sequence;
  std::optional<double> pkd;
};

// CSV with exact header drug_id,smiles,protein_id,sequence,pkd and no
// quoting. Every row is validated (SMILES subset, residue alphabet); the
// first bad row aborts the load with its line number.
std::vector<DatasetRow> load_dataset(const std::string& path);

struct RunConfig {
  std::string dataset;
  std::vector<std::string> drugs;  // drug id selector; empty = all
  std::string protein;             // protein id selector; empty = pair rows as-is
  std::string oracle;              // "surrogate:SEED" or a spec file path
  Method method = Method::macda;
  std::string out_dir = "out";
  Aggregation aggregation = Aggregation::per_pair_then_global;
  TrainConfig train;
};

// Strict parse: unknown keys anywhere are config errors; an empty "train"
// object (or none) keeps every default. "dataset" and "oracle" are required.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);

struct RunResult {
  EvalReport report;
  int pairs = 0;
  std::string records_path;
  std::string report_json_path;
  std::string report_txt_path;
  std::string mutations_path;
};

// Executes the configured method once per selected pair (pair seeds are
// derived from the base seed and the pair index), audits and aggregates the
// harvest, and writes records.jsonl, report.json, report.txt, and
// mutations.csv into out_dir via write-then-rename.
RunResult run(const RunConfig& cfg);

std::vector<CounterfactualRecord> load_records(const std::string& path);

EvalReport eval_records(const std::string& records_path, const std::string& oracle_spec,
                        Aggregation agg = Aggregation::per_pair_then_global);

// Honors CFDTA_LOG: "quiet" suppresses, anything else keeps one stderr line
// per pair.
void log_line(const std::string& message);

}  // namespace cfdta
