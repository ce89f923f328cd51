#include "cfdta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "cfdta/error.hpp"
#include "cfdta/reward.hpp"
#include "cfdta/smiles.hpp"

namespace cfdta {

namespace {

void audit_record(const CounterfactualRecord& rec, const AffinityOracle* oracle) {
  const double dt = std::abs(rec.quad.f_joint - rec.quad.f_ref);
  const double dj = delta_joint_from(rec.quad);
  if (dt != rec.breakdown.delta_total || dj != rec.breakdown.delta_joint) {
    throw DataError("record audit: stored deltas disagree with stored predictor outputs");
  }
  const double ds_first = delta_sjoint_from(rec.quad, SignScope::first_term);
  const double ds_all = delta_sjoint_from(rec.quad, SignScope::all_terms);
  if (rec.breakdown.delta_sjoint != ds_first && rec.breakdown.delta_sjoint != ds_all) {
    throw DataError("record audit: stored signed delta matches neither sign convention");
  }
  if (!oracle) return;
  const MolGraph d_ref = parse_smiles(rec.drug_ref);
  const MolGraph d_cf = parse_smiles(rec.drug_cf);
  const ProteinSeq p_ref(rec.protein_ref);
  const ProteinSeq p_cf(rec.protein_cf);
  OracleQuad fresh;
  fresh.f_ref = oracle->predict(d_ref, p_ref);
  fresh.f_drug_edit = oracle->predict(d_cf, p_ref);
  fresh.f_protein_edit = oracle->predict(d_ref, p_cf);
  fresh.f_joint = oracle->predict(d_cf, p_cf);
  if (fresh.f_ref != rec.quad.f_ref || fresh.f_drug_edit != rec.quad.f_drug_edit ||
      fresh.f_protein_edit != rec.quad.f_protein_edit || fresh.f_joint != rec.quad.f_joint) {
    throw DataError("record audit: predictor disagrees with stored outputs");
  }
  const double sim_d = cosine_similarity(oracle->encode_drug(d_ref), oracle->encode_drug(d_cf));
  const double sim_p =
      cosine_similarity(oracle->encode_protein(p_ref), oracle->encode_protein(p_cf));
  if (sim_d != rec.breakdown.sim_drug || sim_p != rec.breakdown.sim_protein) {
    throw DataError("record audit: similarities disagree with stored values");
  }
}

double trapezoid(double x, double a, double b, double c, double d) {
  if (x <= a || x >= d) return 0.0;
  if (x < b) return (x - a) / (b - a);
  if (x <= c) return 1.0;
  return (d - x) / (d - c);
}

bool bond_is_bridge(const MolGraph& g, int skip_bond) {
  // Connectivity check with one bond removed; graphs here are tiny.
  const int n = g.atom_count();
  std::vector<bool> seen(n, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int visited = 1;
  while (!frontier.empty()) {
    const int at = frontier.front();
    frontier.pop();
    for (int bi : g.incident_bonds(at)) {
      if (bi == skip_bond) continue;
      const Bond& b = g.bonds()[bi];
      const int other = b.u == at ? b.v : b.u;
      if (!seen[other]) {
        seen[other] = true;
        ++visited;
        frontier.push(other);
      }
    }
  }
  return visited != n;
}

}  // namespace

MolDescriptors compute_descriptors(const MolGraph& g) {
  MolDescriptors d;
  for (int i = 0; i < g.atom_count(); ++i) {
    const Atom& a = g.atom(i);
    d.mol_weight += atomic_mass(a.element) + 1.008 * g.implicit_hydrogens(i);
    const bool n_or_o = a.element == Element::N || a.element == Element::O;
    if (n_or_o) {
      ++d.hbond_acceptors;
      if (g.implicit_hydrogens(i) >= 1) ++d.hbond_donors;
    }
  }
  for (int bi = 0; bi < static_cast<int>(g.bonds().size()); ++bi) {
    const Bond& b = g.bonds()[bi];
    if (b.kind != BondKind::single) continue;
    if (g.degree(b.u) < 2 || g.degree(b.v) < 2) continue;
    if (bond_is_bridge(g, bi)) ++d.rotatable_bonds;
  }
  // Independent-cycle count of the aromatic subgraph: edges - vertices +
  // components, over atoms touching an aromatic bond.
  int arom_edges = 0;
  std::vector<int> arom_atom(g.atom_count(), 0);
  for (const Bond& b : g.bonds()) {
    if (b.kind != BondKind::aromatic) continue;
    ++arom_edges;
    arom_atom[b.u] = 1;
    arom_atom[b.v] = 1;
  }
  int arom_vertices = 0;
  for (int flag : arom_atom) arom_vertices += flag;
  if (arom_edges > 0) {
    std::vector<bool> seen(g.atom_count(), false);
    int components = 0;
    for (int start = 0; start < g.atom_count(); ++start) {
      if (!arom_atom[start] || seen[start]) continue;
      ++components;
      std::queue<int> frontier;
      frontier.push(start);
      seen[start] = true;
      while (!frontier.empty()) {
        const int at = frontier.front();
        frontier.pop();
        for (int bi : g.incident_bonds(at)) {
          const Bond& b = g.bonds()[bi];
          if (b.kind != BondKind::aromatic) continue;
          const int other = b.u == at ? b.v : b.u;
          if (!seen[other]) {
            seen[other] = true;
            frontier.push(other);
          }
        }
      }
    }
    d.aromatic_rings = arom_edges - arom_vertices + components;
  }
  return d;
}

double druglikeness(const MolGraph& g) {
  const MolDescriptors d = compute_descriptors(g);
  const double terms[5] = {
      trapezoid(d.mol_weight, 100.0, 200.0, 500.0, 700.0),
      trapezoid(static_cast<double>(d.hbond_donors), -1.0, 0.0, 5.0, 10.0),
      trapezoid(static_cast<double>(d.hbond_acceptors), -1.0, 0.0, 10.0, 15.0),
      trapezoid(static_cast<double>(d.rotatable_bonds), -1.0, 0.0, 10.0, 15.0),
      trapezoid(static_cast<double>(d.aromatic_rings), 0.0, 1.0, 3.0, 5.0),
  };
  double log_sum = 0.0;
  for (double t : terms) log_sum += std::log(std::clamp(t, 0.01, 1.0));
  return std::exp(log_sum / 5.0);
}

EvalReport evaluate(const std::vector<CounterfactualRecord>& records,
                    const AffinityOracle* oracle, Aggregation agg) {
  if (records.empty()) throw DataError("evaluate: no records");
  struct Sums {
    double delta_joint = 0, drug_sim = 0, protein_sim = 0, druglikeness = 0;
    int n = 0;
  };
  std::map<int, Sums> by_pair;
  std::string method = records.front().method;
  for (const CounterfactualRecord& rec : records) {
    audit_record(rec, oracle);
    if (rec.method != method) method = "mixed";
    Sums& s = by_pair[agg == Aggregation::per_pair_then_global ? rec.pair_index : 0];
    s.delta_joint += delta_joint_from(rec.quad);
    s.drug_sim += rec.breakdown.sim_drug;
    s.protein_sim += rec.breakdown.sim_protein;
    s.druglikeness += druglikeness(parse_smiles(rec.drug_cf));
    s.n += 1;
  }
  EvalReport report;
  report.method = method;
  for (const auto& [pair, s] : by_pair) {
    report.avg_delta_joint += s.delta_joint / s.n;
    report.avg_drug_sim += s.drug_sim / s.n;
    report.avg_protein_sim += s.protein_sim / s.n;
    report.avg_druglikeness += s.druglikeness / s.n;
    report.n += s.n;
  }
  const double groups = static_cast<double>(by_pair.size());
  report.avg_delta_joint /= groups;
  report.avg_drug_sim /= groups;
  report.avg_protein_sim /= groups;
  report.avg_druglikeness /= groups;
  return report;
}

MutationHistogram mutation_histogram(const std::vector<CounterfactualRecord>& records) {
  MutationHistogram hist;
  for (const CounterfactualRecord& rec : records) {
    if (rec.protein_position < 0) continue;
    ++hist.counts[rec.protein_position];
    ++hist.total;
  }
  return hist;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["method"] = report.method;
  j["avg_delta_joint"] = report.avg_delta_joint;
  j["avg_drug_sim"] = report.avg_drug_sim;
  j["avg_protein_sim"] = report.avg_protein_sim;
  j["avg_druglikeness"] = report.avg_druglikeness;
  j["n"] = report.n;
  return j.dump(2) + "\n";
}

std::string format_report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %14s %12s %15s %16s %6s\n", "method", "avg_delta_joint",
                "avg_drug_sim", "avg_protein_sim", "avg_druglikeness", "n");
  out << line;
  for (const EvalReport& r : reports) {
    std::snprintf(line, sizeof line, "%-10s %14.6f %12.6f %15.6f %16.6f %6d\n", r.method.c_str(),
                  r.avg_delta_joint, r.avg_drug_sim, r.avg_protein_sim, r.avg_druglikeness, r.n);
    out << line;
  }
  return out.str();
}

std::string mutation_histogram_csv(const MutationHistogram& hist) {
  std::ostringstream out;
  out << "position,count\n";
  for (const auto& [position, count] : hist.counts) {
    out << position << "," << count << "\n";
  }
  return out.str();
}

}  // namespace cfdta
