#pragma once

// Test-only helpers: brute-force oracles and random fixtures. Everything here
// is deliberately naive; production code must never include this header.

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cfdta/molgraph.hpp"
#include "cfdta/protein.hpp"
#include "cfdta/rng.hpp"

namespace cfdta::testutil {

// Relabels atoms so old atom i becomes new atom perm[i].
inline MolGraph permute_graph(const MolGraph& g, const std::vector<int>& perm) {
  std::vector<Atom> atoms(g.atoms().size());
  for (int i = 0; i < g.atom_count(); ++i) {
    atoms[std::size_t(perm[std::size_t(i)])] = g.atom(i);
  }
  std::vector<Bond> bonds;
  bonds.reserve(g.bonds().size());
  for (const Bond& b : g.bonds()) {
    bonds.push_back({perm[std::size_t(b.u)], perm[std::size_t(b.v)], b.kind});
  }
  return MolGraph(std::move(atoms), std::move(bonds));
}

inline std::vector<int> random_permutation(DetRng& rng, int n) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[std::size_t(i)], perm[std::size_t(rng.index(i + 1))]);
  return perm;
}

// Attribute-preserving isomorphism by trying every permutation of b onto a.
// Factorial blowup; callers keep graphs at <= 8 atoms.
inline bool brute_force_isomorphic(const MolGraph& a, const MolGraph& b) {
  const int n = a.atom_count();
  if (n != b.atom_count() || a.bonds().size() != b.bonds().size()) return false;

  std::map<std::pair<int, int>, BondKind> eb;
  for (const Bond& bond : b.bonds()) eb[{bond.u, bond.v}] = bond.kind;

  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      const Atom& x = a.atom(i);
      const Atom& y = b.atom(perm[std::size_t(i)]);
      ok = x.element == y.element && x.aromatic == y.aromatic;
    }
    for (std::size_t bi = 0; bi < a.bonds().size() && ok; ++bi) {
      const Bond& bond = a.bonds()[bi];
      int u = perm[std::size_t(bond.u)];
      int v = perm[std::size_t(bond.v)];
      if (u > v) std::swap(u, v);
      auto it = eb.find({u, v});
      ok = it != eb.end() && it->second == bond.kind;
    }
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

// Twice the bond-order sum at each atom (single=2, double=4, triple=6); the
// fixtures below never use aromatic atoms, so no rounding convention applies.
inline std::vector<int> naive_order_twice(const std::vector<Atom>& atoms,
                                          const std::vector<Bond>& bonds) {
  std::vector<int> t(atoms.size(), 0);
  for (const Bond& b : bonds) {
    int o = b.kind == BondKind::single ? 2 : b.kind == BondKind::double_ ? 4 : 6;
    t[std::size_t(b.u)] += o;
    t[std::size_t(b.v)] += o;
  }
  return t;
}

inline int naive_free_valence(const std::vector<Atom>& atoms, const std::vector<Bond>& bonds,
                              int i) {
  return max_valence(atoms[std::size_t(i)].element) -
         naive_order_twice(atoms, bonds)[std::size_t(i)] / 2;
}

// Random connected valence-valid molecule over plain (non-aromatic) atoms.
inline MolGraph random_graph(DetRng& rng, int max_atoms,
                             const std::vector<Element>& elements = {Element::C, Element::C,
                                                                     Element::N, Element::O,
                                                                     Element::F}) {
  const int target = 1 + rng.index(max_atoms);
  std::vector<Atom> atoms = {{elements[std::size_t(rng.index(int(elements.size())))], false}};
  std::vector<Bond> bonds;

  while (int(atoms.size()) < target) {
    std::vector<int> sites;
    for (int i = 0; i < int(atoms.size()); ++i) {
      if (naive_free_valence(atoms, bonds, i) >= 1) sites.push_back(i);
    }
    if (sites.empty()) break;
    int site = sites[std::size_t(rng.index(int(sites.size())))];
    atoms.push_back({elements[std::size_t(rng.index(int(elements.size())))], false});
    bonds.push_back({site, int(atoms.size()) - 1, BondKind::single});
  }

  // A few extra ring closures / order raises for structural variety.
  for (int extra = rng.index(3); extra > 0; --extra) {
    std::vector<std::pair<int, int>> open;
    std::set<std::pair<int, int>> bonded;
    for (const Bond& b : bonds) bonded.insert({b.u, b.v});
    for (int u = 0; u < int(atoms.size()); ++u) {
      for (int v = u + 1; v < int(atoms.size()); ++v) {
        if (bonded.count({u, v})) continue;
        if (naive_free_valence(atoms, bonds, u) >= 1 &&
            naive_free_valence(atoms, bonds, v) >= 1) {
          open.emplace_back(u, v);
        }
      }
    }
    std::vector<std::size_t> raisable;
    for (std::size_t bi = 0; bi < bonds.size(); ++bi) {
      if (bonds[bi].kind == BondKind::triple) continue;
      if (naive_free_valence(atoms, bonds, bonds[bi].u) >= 1 &&
          naive_free_valence(atoms, bonds, bonds[bi].v) >= 1) {
        raisable.push_back(bi);
      }
    }
    const int total = int(open.size() + raisable.size());
    if (total == 0) break;
    int pick = rng.index(total);
    if (pick < int(open.size())) {
      bonds.push_back({open[std::size_t(pick)].first, open[std::size_t(pick)].second,
                       BondKind::single});
    } else {
      Bond& b = bonds[raisable[std::size_t(pick - int(open.size()))]];
      b.kind = b.kind == BondKind::single ? BondKind::double_ : BondKind::triple;
    }
  }
  return MolGraph(std::move(atoms), std::move(bonds));
}

// Re-derivation of the one-step drug edit set from the stated rules, as the
// certificate set of the resulting molecules. Written against the rule text,
// not the production enumerator, so the two can disagree.
inline std::set<std::string> naive_drug_action_certs(const MolGraph& g,
                                                     const std::vector<Element>& admissible) {
  const std::vector<Atom>& atoms = g.atoms();
  const std::vector<Bond>& bonds = g.bonds();
  const int n = int(atoms.size());
  std::set<std::string> certs;
  auto emit = [&certs](std::vector<Atom> a, std::vector<Bond> b) {
    certs.insert(canonical_certificate(MolGraph(std::move(a), std::move(b))));
  };

  std::set<Element> elems(admissible.begin(), admissible.end());
  for (int i = 0; i < n; ++i) {
    if (naive_free_valence(atoms, bonds, i) < 1) continue;
    for (Element e : elems) {
      auto a2 = atoms;
      auto b2 = bonds;
      a2.push_back({e, false});
      b2.push_back({i, n, BondKind::single});
      emit(std::move(a2), std::move(b2));
    }
  }

  std::set<std::pair<int, int>> bonded;
  for (const Bond& b : bonds) bonded.insert({b.u, b.v});
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (bonded.count({u, v})) continue;
      if (naive_free_valence(atoms, bonds, u) < 1 || naive_free_valence(atoms, bonds, v) < 1) {
        continue;
      }
      auto b2 = bonds;
      b2.push_back({u, v, BondKind::single});
      emit(atoms, std::move(b2));
    }
  }
  for (std::size_t bi = 0; bi < bonds.size(); ++bi) {
    const Bond& b = bonds[bi];
    if (b.kind == BondKind::triple || b.kind == BondKind::aromatic) continue;
    if (naive_free_valence(atoms, bonds, b.u) < 1 || naive_free_valence(atoms, bonds, b.v) < 1) {
      continue;
    }
    auto b2 = bonds;
    b2[bi].kind = b.kind == BondKind::single ? BondKind::double_ : BondKind::triple;
    emit(atoms, std::move(b2));
  }

  for (std::size_t bi = 0; bi < bonds.size(); ++bi) {
    const Bond& b = bonds[bi];
    if (b.kind == BondKind::aromatic) continue;
    if (b.kind != BondKind::single) {
      auto b2 = bonds;
      b2[bi].kind = b.kind == BondKind::triple ? BondKind::double_ : BondKind::single;
      emit(atoms, std::move(b2));
      continue;
    }
    // Deleting a single bond: flood from u without crossing the bond, then
    // keep the larger side (ties: the side holding the smallest atom index).
    std::vector<char> side_u(std::size_t(n), 0);
    side_u[std::size_t(b.u)] = 1;
    std::vector<int> stack = {b.u};
    while (!stack.empty()) {
      int at = stack.back();
      stack.pop_back();
      for (std::size_t ei = 0; ei < bonds.size(); ++ei) {
        if (ei == bi) continue;
        const Bond& e = bonds[ei];
        int w = e.u == at ? e.v : e.v == at ? e.u : -1;
        if (w >= 0 && !side_u[std::size_t(w)]) {
          side_u[std::size_t(w)] = 1;
          stack.push_back(w);
        }
      }
    }
    int reach = int(std::count(side_u.begin(), side_u.end(), char(1)));
    std::vector<char> keep(std::size_t(n), 1);
    if (reach < n) {
      bool keep_u = reach * 2 > n;
      if (reach * 2 == n) keep_u = side_u[0] == 1;  // atom 0 is always the minimum index
      for (int i = 0; i < n; ++i) keep[std::size_t(i)] = side_u[std::size_t(i)] == char(keep_u);
    }
    std::vector<int> remap(std::size_t(n), -1);
    std::vector<Atom> a2;
    for (int i = 0; i < n; ++i) {
      if (keep[std::size_t(i)]) {
        remap[std::size_t(i)] = int(a2.size());
        a2.push_back(atoms[std::size_t(i)]);
      }
    }
    if (a2.empty()) continue;
    std::vector<Bond> b2;
    for (std::size_t ei = 0; ei < bonds.size(); ++ei) {
      if (ei == bi) continue;
      const Bond& e = bonds[ei];
      if (keep[std::size_t(e.u)] && keep[std::size_t(e.v)]) {
        b2.push_back({remap[std::size_t(e.u)], remap[std::size_t(e.v)], e.kind});
      }
    }
    emit(std::move(a2), std::move(b2));
  }
  return certs;
}

inline ProteinSeq random_protein(DetRng& rng, int len) {
  static const char* kAlphabet = "ACDEFGHIKLMNPQRSTVWY";
  std::string s;
  s.reserve(std::size_t(len));
  for (int i = 0; i < len; ++i) s += kAlphabet[rng.index(20)];
  return ProteinSeq(s);
}

struct FdReport {
  double max_rel_err = 0.0;
  int checked = 0;
};

// Central finite differences against an analytic gradient. The loss closure
// reads the live parameter vector; rel error uses a floor of 1 so near-zero
// gradients compare absolutely.
template <typename LossFn>
FdReport fd_check(Eigen::VectorXd& params, const Eigen::VectorXd& analytic, LossFn&& loss,
                  double step = 1e-5) {
  FdReport report;
  for (int i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double up = loss();
    params[i] = saved - step;
    const double down = loss();
    params[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
    report.max_rel_err = std::max(report.max_rel_err, std::abs(fd - analytic[i]) / denom);
    ++report.checked;
  }
  return report;
}

}  // namespace cfdta::testutil
