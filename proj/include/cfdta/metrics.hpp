#pragma once

// Aggregate evaluation over harvested records plus the structural
// descriptors backing the drug-likeness score. Stored records are never
// trusted blindly: derived quantities are recomputed from the embedded
// predictor outputs and mismatches are integrity errors.

#include <map>
#include <string>
#include <vector>

#include "cfdta/marl.hpp"
#include "cfdta/molgraph.hpp"
#include "cfdta/oracle.hpp"

namespace cfdta {

struct EvalReport {
  std::string method;
  double avg_delta_joint = 0.0;
  double avg_drug_sim = 0.0;
  double avg_protein_sim = 0.0;
  double avg_druglikeness = 0.0;
  int n = 0;
};

// Mean of per-pair means (pairs weighted equally) or one global mean over
// all records.
enum class Aggregation { per_pair_then_global, global };

// Recomputes the delta quantities from each record's stored predictor quad
// and fails on any disagreement with the stored breakdown. With an oracle
// supplied, additionally re-queries all four predictions and the two
// similarities and requires exact agreement.
EvalReport evaluate(const std::vector<CounterfactualRecord>& records,
                    const AffinityOracle* oracle = nullptr,
                    Aggregation agg = Aggregation::per_pair_then_global);

struct MolDescriptors {
  double mol_weight = 0.0;  // includes implicit hydrogens
  int hbond_donors = 0;     // N/O carrying at least one implicit H
  int hbond_acceptors = 0;  // N/O count
  int rotatable_bonds = 0;  // acyclic single bonds between degree >= 2 atoms
  int aromatic_rings = 0;   // independent cycles of the aromatic subgraph
};

MolDescriptors compute_descriptors(const MolGraph& g);

// Geometric mean of piecewise-linear desirabilities over the descriptors,
// each clamped to [0.01, 1]:
//   weight          rises 100..200, flat to 500, falls to 700
//   donors          flat to 5, falls to 10
//   acceptors       flat to 10, falls to 15
//   rotatable       flat to 10, falls to 15
//   aromatic rings  rises 0..1, flat to 3, falls to 5
// A crude stand-in for published drug-likeness estimators; values are only
// comparable within this codebase.
double druglikeness(const MolGraph& g);

struct MutationHistogram {
  std::map<int, int> counts;
  int total = 0;  // records carrying a protein edit
};

MutationHistogram mutation_histogram(const std::vector<CounterfactualRecord>& records);

std::string report_to_json(const EvalReport& report);
// Fixed-width table, one row per report, mirroring the JSON fields.
std::string format_report_table(const std::vector<EvalReport>& reports);
std::string mutation_histogram_csv(const MutationHistogram& hist);

}  // namespace cfdta
