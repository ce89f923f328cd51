#include "cfdta/actionspace.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

#include "cfdta/error.hpp"

namespace cfdta {

std::string DrugAction::describe() const {
  switch (kind) {
    case Kind::add_atom:
      return "add_atom " + std::string(element_symbol(element)) + "@" + std::to_string(u);
    case Kind::add_bond:
      return "add_bond " + std::to_string(u) + "-" + std::to_string(v);
    case Kind::remove_bond:
      return "remove_bond " + std::to_string(u) + "-" + std::to_string(v);
  }
  return "?";
}

JointAction::JointAction(std::optional<DrugAction> d, std::optional<ProteinAction> p)
    : drug(std::move(d)), protein(std::move(p)) {
  if (!drug && !protein) throw RuntimeError("joint action with no action on either side");
}

namespace {

std::optional<MolGraph> apply_add_atom(const MolGraph& g, int site, Element e) {
  if (g.free_valence(site) < 1 || max_valence(e) < 1) return std::nullopt;
  std::vector<Atom> atoms = g.atoms();
  std::vector<Bond> bonds = g.bonds();
  atoms.push_back({e, false});
  bonds.push_back({site, int(atoms.size()) - 1, BondKind::single});
  return MolGraph(std::move(atoms), std::move(bonds));
}

BondKind raise_kind(BondKind k) {
  return k == BondKind::single ? BondKind::double_ : BondKind::triple;
}

BondKind lower_kind(BondKind k) {
  return k == BondKind::triple ? BondKind::double_ : BondKind::single;
}

std::optional<MolGraph> apply_raise_bond(const MolGraph& g, int bond_idx) {
  const Bond& b = g.bonds()[std::size_t(bond_idx)];
  if (b.kind == BondKind::aromatic || b.kind == BondKind::triple) return std::nullopt;
  if (g.free_valence(b.u) < 1 || g.free_valence(b.v) < 1) return std::nullopt;
  std::vector<Bond> bonds = g.bonds();
  bonds[std::size_t(bond_idx)].kind = raise_kind(b.kind);
  return MolGraph(g.atoms(), std::move(bonds));
}

std::optional<MolGraph> apply_new_bond(const MolGraph& g, int u, int v) {
  if (g.find_bond(u, v) != nullptr) return std::nullopt;
  if (g.free_valence(u) < 1 || g.free_valence(v) < 1) return std::nullopt;
  std::vector<Bond> bonds = g.bonds();
  bonds.push_back({u, v, BondKind::single});
  return MolGraph(g.atoms(), std::move(bonds));
}

// Lower by one order; a deleted bridge orphans a fragment, and the larger
// component survives (ties: the one holding the smaller original index).
std::optional<MolGraph> apply_lower_bond(const MolGraph& g, int bond_idx) {
  const Bond& b = g.bonds()[std::size_t(bond_idx)];
  if (b.kind == BondKind::aromatic) return std::nullopt;
  if (b.kind != BondKind::single) {
    std::vector<Bond> bonds = g.bonds();
    bonds[std::size_t(bond_idx)].kind = lower_kind(b.kind);
    return MolGraph(g.atoms(), std::move(bonds));
  }

  const int n = g.atom_count();
  std::vector<char> side_u(std::size_t(n), 0);
  std::vector<int> stack = {b.u};
  side_u[std::size_t(b.u)] = 1;
  int reach = 1;
  while (!stack.empty()) {
    int a = stack.back();
    stack.pop_back();
    for (int bi : g.incident_bonds(a)) {
      if (bi == bond_idx) continue;
      const Bond& e = g.bonds()[std::size_t(bi)];
      int w = (e.u == a) ? e.v : e.u;
      if (!side_u[std::size_t(w)]) {
        side_u[std::size_t(w)] = 1;
        ++reach;
        stack.push_back(w);
      }
    }
  }

  std::vector<char> keep(std::size_t(n), 1);
  if (reach < n) {
    bool keep_u_side;
    if (reach * 2 != n) {
      keep_u_side = reach * 2 > n;
    } else {
      int min_u = n, min_v = n;
      for (int i = 0; i < n; ++i) {
        if (side_u[std::size_t(i)]) {
          min_u = std::min(min_u, i);
        } else {
          min_v = std::min(min_v, i);
        }
      }
      keep_u_side = min_u < min_v;
    }
    for (int i = 0; i < n; ++i) keep[std::size_t(i)] = (side_u[std::size_t(i)] == char(keep_u_side));
  }

  std::vector<int> remap(std::size_t(n), -1);
  std::vector<Atom> atoms;
  for (int i = 0; i < n; ++i) {
    if (keep[std::size_t(i)]) {
      remap[std::size_t(i)] = int(atoms.size());
      atoms.push_back(g.atom(i));
    }
  }
  if (atoms.empty()) return std::nullopt;
  std::vector<Bond> bonds;
  for (std::size_t bi = 0; bi < g.bonds().size(); ++bi) {
    if (int(bi) == bond_idx) continue;
    const Bond& e = g.bonds()[bi];
    if (keep[std::size_t(e.u)] && keep[std::size_t(e.v)]) {
      bonds.push_back({remap[std::size_t(e.u)], remap[std::size_t(e.v)], e.kind});
    }
  }
  return MolGraph(std::move(atoms), std::move(bonds));
}

}  // namespace

std::vector<DrugAction> enumerate_drug_actions(const MolGraph& g,
                                               const std::vector<Element>& admissible) {
  if (admissible.empty()) throw ConfigError("admissible element set is empty");
  std::set<Element> elems(admissible.begin(), admissible.end());

  std::vector<DrugAction> raw;

  for (int i = 0; i < g.atom_count(); ++i) {
    for (Element e : elems) {
      if (auto r = apply_add_atom(g, i, e)) {
        raw.push_back({DrugAction::Kind::add_atom, e, i, -1, std::move(*r), {}});
      }
    }
  }
  for (std::size_t bi = 0; bi < g.bonds().size(); ++bi) {
    if (auto r = apply_raise_bond(g, int(bi))) {
      const Bond& b = g.bonds()[bi];
      raw.push_back({DrugAction::Kind::add_bond, Element::C, b.u, b.v, std::move(*r), {}});
    }
  }
  for (int u = 0; u < g.atom_count(); ++u) {
    for (int v = u + 1; v < g.atom_count(); ++v) {
      if (auto r = apply_new_bond(g, u, v)) {
        raw.push_back({DrugAction::Kind::add_bond, Element::C, u, v, std::move(*r), {}});
      }
    }
  }
  for (std::size_t bi = 0; bi < g.bonds().size(); ++bi) {
    if (auto r = apply_lower_bond(g, int(bi))) {
      const Bond& b = g.bonds()[bi];
      raw.push_back({DrugAction::Kind::remove_bond, Element::C, b.u, b.v, std::move(*r), {}});
    }
  }

  std::map<std::string, DrugAction> by_cert;
  for (DrugAction& a : raw) {
    a.certificate = canonical_certificate(a.result);
    std::string key = a.certificate;
    by_cert.try_emplace(std::move(key), std::move(a));
  }

  std::vector<DrugAction> out;
  out.reserve(by_cert.size());
  for (auto& [cert, action] : by_cert) out.push_back(std::move(action));
  return out;  // map iteration is already certificate order
}

std::vector<ProteinAction> enumerate_protein_actions(const ProteinSeq& p) {
  std::vector<ProteinAction> out;
  for (int i = 0; i < p.size(); ++i) {
    if (p.residue(i) == 'A') continue;
    out.push_back({i, i >= kEncodedProteinLength, mutate_to_alanine(p, i)});
  }
  return out;
}

}  // namespace cfdta
