#include "cfdta/molgraph.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <limits>
#include <map>
#include <utility>

#include "cfdta/error.hpp"
#include "cfdta/rng.hpp"

namespace cfdta {

namespace {

struct ElementInfo {
  std::string_view symbol;
  int max_valence;
  double mass;
};

// Indexed by Element. Masses are standard atomic weights.
constexpr std::array<ElementInfo, kElementCount> kElements = {{
    {"B", 3, 10.81},
    {"C", 4, 12.011},
    {"N", 3, 14.007},
    {"O", 2, 15.999},
    {"P", 5, 30.974},
    {"S", 6, 32.06},
    {"F", 1, 18.998},
    {"Cl", 1, 35.45},
    {"Br", 1, 79.904},
    {"I", 1, 126.904},
}};

}  // namespace

int max_valence(Element e) { return kElements[std::size_t(e)].max_valence; }
double atomic_mass(Element e) { return kElements[std::size_t(e)].mass; }
std::string_view element_symbol(Element e) { return kElements[std::size_t(e)].symbol; }

std::optional<Element> element_from_symbol(std::string_view s) {
  for (int i = 0; i < kElementCount; ++i) {
    if (kElements[std::size_t(i)].symbol == s) return Element(i);
  }
  return std::nullopt;
}

int bond_order_twice(BondKind k) {
  switch (k) {
    case BondKind::single: return 2;
    case BondKind::double_: return 4;
    case BondKind::triple: return 6;
    case BondKind::aromatic: return 3;
  }
  throw RuntimeError("bond_order_twice: bad kind");
}

MolGraph::MolGraph(std::vector<Atom> atoms, std::vector<Bond> bonds)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)) {
  adj_.resize(atoms_.size());
  for (std::size_t bi = 0; bi < bonds_.size(); ++bi) {
    Bond& b = bonds_[bi];
    if (b.u > b.v) std::swap(b.u, b.v);
    if (b.u >= 0 && std::size_t(b.v) < atoms_.size() && b.u != b.v) {
      adj_[std::size_t(b.u)].push_back(int(bi));
      adj_[std::size_t(b.v)].push_back(int(bi));
    }
  }
  validate();
}

const Bond* MolGraph::find_bond(int u, int v) const {
  if (u < 0 || v < 0 || u >= atom_count() || v >= atom_count()) return nullptr;
  for (int bi : adj_[std::size_t(u)]) {
    const Bond& b = bonds_[std::size_t(bi)];
    if ((b.u == u && b.v == v) || (b.u == v && b.v == u)) return &b;
  }
  return nullptr;
}

int MolGraph::bond_order_sum_twice(int i) const {
  int t = 0;
  for (int bi : adj_[std::size_t(i)]) t += bond_order_twice(bonds_[std::size_t(bi)].kind);
  return t;
}

int MolGraph::explicit_valence(int i) const {
  int twice = bond_order_sum_twice(i);
  int consumed = twice / 2;
  const Atom& a = atom(i);
  if (consumed > max_valence(a.element) && a.aromatic) {
    Element e = a.element;
    if (e == Element::N || e == Element::O || e == Element::P) {
      int arom = 0;
      for (int bi : adj_[std::size_t(i)]) {
        if (bonds_[std::size_t(bi)].kind == BondKind::aromatic) ++arom;
      }
      if (arom == 2) consumed = (twice - arom) / 2;
    }
  }
  return consumed;
}

void MolGraph::validate() const {
  if (atoms_.empty()) throw DataError("molecule has no atoms");
  const int n = atom_count();

  std::vector<std::pair<int, int>> seen;
  for (const Bond& b : bonds_) {
    if (b.u < 0 || b.v >= n || b.u == b.v) {
      throw DataError("bond endpoints out of range or equal");
    }
    seen.emplace_back(b.u, b.v);
    if (b.kind == BondKind::aromatic &&
        !(atom(b.u).aromatic && atom(b.v).aromatic)) {
      throw DataError("aromatic bond joining non-aromatic atom");
    }
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw DataError("duplicate bond");
  }

  for (int i = 0; i < n; ++i) {
    if (explicit_valence(i) > max_valence(atom(i).element)) {
      throw DataError("valence overflow at atom " + std::to_string(i) + " (" +
                      std::string(element_symbol(atom(i).element)) + ")");
    }
    if (atom(i).aromatic) {
      int arom = 0;
      for (int bi : adj_[std::size_t(i)]) {
        if (bonds_[std::size_t(bi)].kind == BondKind::aromatic) ++arom;
      }
      if (arom < 2) {
        throw DataError("aromatic atom " + std::to_string(i) +
                        " is not inside an aromatic ring");
      }
    }
  }

  // Connectivity; multi-fragment molecules are not representable.
  std::vector<char> vis(std::size_t(n), 0);
  std::vector<int> stack = {0};
  vis[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int bi : adj_[std::size_t(u)]) {
      const Bond& b = bonds_[std::size_t(bi)];
      int w = (b.u == u) ? b.v : b.u;
      if (!vis[std::size_t(w)]) {
        vis[std::size_t(w)] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != n) throw DataError("molecule graph is disconnected");
}

int atom_free_valence(const MolGraph& g, int atom) {
  if (atom < 0 || atom >= g.atom_count()) {
    throw RuntimeError("atom_free_valence: atom index out of range");
  }
  return g.free_valence(atom);
}

Fingerprint::Fingerprint(int nbits) : nbits_(nbits) {
  if (nbits <= 0) throw RuntimeError("Fingerprint: nbits must be positive");
  words_.assign(std::size_t((nbits + 63) / 64), 0);
}

void Fingerprint::set(int bit) {
  if (bit < 0 || bit >= nbits_) throw RuntimeError("Fingerprint::set: bit out of range");
  words_[std::size_t(bit / 64)] |= std::uint64_t(1) << (bit % 64);
}

bool Fingerprint::test(int bit) const {
  if (bit < 0 || bit >= nbits_) throw RuntimeError("Fingerprint::test: bit out of range");
  return (words_[std::size_t(bit / 64)] >> (bit % 64)) & 1;
}

int Fingerprint::count() const {
  int c = 0;
  for (std::uint64_t w : words_) c += std::popcount(w);
  return c;
}

std::vector<int> Fingerprint::set_bits() const {
  std::vector<int> out;
  for (int i = 0; i < nbits_; ++i) {
    if (test(i)) out.push_back(i);
  }
  return out;
}

Eigen::VectorXd Fingerprint::to_vector() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(nbits_);
  for (int i = 0; i < nbits_; ++i) {
    if (test(i)) v[i] = 1.0;
  }
  return v;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.nbits() != b.nbits()) throw RuntimeError("tanimoto: fingerprint widths differ");
  int inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i) {
    inter += std::popcount(a.words()[i] & b.words()[i]);
    uni += std::popcount(a.words()[i] | b.words()[i]);
  }
  if (uni == 0) return 1.0;
  return double(inter) / double(uni);
}

namespace {

std::uint64_t atom_seed_id(const MolGraph& g, int i) {
  const Atom& a = g.atom(i);
  std::uint64_t h = 0x243f6a8885a308d3ull;
  h = hash_combine(h, std::uint64_t(a.element));
  h = hash_combine(h, std::uint64_t(g.degree(i)));
  h = hash_combine(h, std::uint64_t(g.explicit_valence(i)));
  h = hash_combine(h, std::uint64_t(g.free_valence(i)));
  h = hash_combine(h, std::uint64_t(a.aromatic));
  return h;
}

}  // namespace

Fingerprint compute_fingerprint(const MolGraph& g, int radius, int nbits) {
  if (radius < 0) throw RuntimeError("compute_fingerprint: negative radius");
  Fingerprint fp(nbits);
  const int n = g.atom_count();

  std::vector<std::uint64_t> cur(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cur[std::size_t(i)] = atom_seed_id(g, i);
    fp.set_hashed(cur[std::size_t(i)]);
  }

  std::vector<std::uint64_t> next(static_cast<std::size_t>(n));
  for (int r = 1; r <= radius; ++r) {
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<int, std::uint64_t>> env;
      env.reserve(std::size_t(g.degree(i)));
      for (int bi : g.incident_bonds(i)) {
        const Bond& b = g.bonds()[std::size_t(bi)];
        int j = (b.u == i) ? b.v : b.u;
        env.emplace_back(bond_order_twice(b.kind), cur[std::size_t(j)]);
      }
      std::sort(env.begin(), env.end());
      std::uint64_t h = hash_combine(0x452821e638d01377ull, std::uint64_t(r));
      h = hash_combine(h, cur[std::size_t(i)]);
      for (const auto& [code, id] : env) {
        h = hash_combine(h, std::uint64_t(code));
        h = hash_combine(h, id);
      }
      next[std::size_t(i)] = h;
      fp.set_hashed(h);
    }
    cur.swap(next);
  }
  return fp;
}

namespace {

// Color refinement: signatures (own color, sorted (bond code, neighbor
// color) list) are ranked lexicographically and renumbered densely.
// Refinement only splits classes, so a stable class count means a fixpoint.
std::vector<int> refine_colors(const MolGraph& g, std::vector<int> colors) {
  const int n = g.atom_count();
  int classes = 0;
  {
    std::vector<int> sorted(colors);
    std::sort(sorted.begin(), sorted.end());
    classes = int(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  }
  for (;;) {
    std::vector<std::vector<int>> sig(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<int, int>> env;
      for (int bi : g.incident_bonds(i)) {
        const Bond& b = g.bonds()[std::size_t(bi)];
        int j = (b.u == i) ? b.v : b.u;
        env.emplace_back(bond_order_twice(b.kind), colors[std::size_t(j)]);
      }
      std::sort(env.begin(), env.end());
      std::vector<int>& s = sig[std::size_t(i)];
      s.push_back(colors[std::size_t(i)]);
      for (const auto& [code, c] : env) {
        s.push_back(code);
        s.push_back(c);
      }
    }
    std::map<std::vector<int>, int> rank;
    for (int i = 0; i < n; ++i) rank[sig[std::size_t(i)]] = 0;
    int next_id = 0;
    for (auto& [k, v] : rank) v = next_id++;
    for (int i = 0; i < n; ++i) colors[std::size_t(i)] = rank[sig[std::size_t(i)]];
    if (next_id == classes) return colors;
    classes = next_id;
  }
}

std::vector<int> initial_colors(const MolGraph& g) {
  const int n = g.atom_count();
  std::map<std::pair<int, int>, int> rank;
  for (int i = 0; i < n; ++i) {
    rank[{int(g.atom(i).element), int(g.atom(i).aromatic)}] = 0;
  }
  int next_id = 0;
  for (auto& [k, v] : rank) v = next_id++;
  std::vector<int> colors(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    colors[std::size_t(i)] = rank[{int(g.atom(i).element), int(g.atom(i).aromatic)}];
  }
  return colors;
}

// Discrete coloring -> canonical byte string. colors[i] is the canonical
// position of atom i.
std::string certificate_from(const MolGraph& g, const std::vector<int>& colors) {
  const int n = g.atom_count();
  std::vector<int> inv(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) inv[std::size_t(colors[std::size_t(i)])] = i;

  std::string s;
  s += std::to_string(n);
  s += ';';
  for (int c = 0; c < n; ++c) {
    const Atom& a = g.atom(inv[std::size_t(c)]);
    s += element_symbol(a.element);
    if (a.aromatic) s += '\'';
    s += ',';
  }
  s += ';';
  std::vector<std::array<int, 3>> edges;
  edges.reserve(g.bonds().size());
  for (const Bond& b : g.bonds()) {
    int cu = colors[std::size_t(b.u)];
    int cv = colors[std::size_t(b.v)];
    if (cu > cv) std::swap(cu, cv);
    edges.push_back({cu, cv, bond_order_twice(b.kind)});
  }
  std::sort(edges.begin(), edges.end());
  for (const auto& e : edges) {
    s += std::to_string(e[0]);
    s += '-';
    s += std::to_string(e[1]);
    s += ':';
    s += std::to_string(e[2]);
    s += ',';
  }
  return s;
}

struct CanonSearch {
  const MolGraph& g;
  std::string best;
  std::vector<int> best_colors;

  void run(std::vector<int> colors) {
    colors = refine_colors(g, colors);
    const int n = g.atom_count();

    int cell_color = -1;
    for (int c = 0; c < n && cell_color < 0; ++c) {
      int count = 0;
      for (int i = 0; i < n; ++i) {
        if (colors[std::size_t(i)] == c) ++count;
      }
      if (count > 1) cell_color = c;
      if (count == 0) break;  // colors are dense; past the last class
    }

    if (cell_color < 0) {
      std::string cert = certificate_from(g, colors);
      if (best.empty() || cert < best) {
        best = std::move(cert);
        best_colors = colors;
      }
      return;
    }

    // Individualize each member of the first ambiguous cell in turn and
    // take the lexicographically smallest outcome.
    for (int i = 0; i < n; ++i) {
      if (colors[std::size_t(i)] != cell_color) continue;
      std::vector<int> branched(colors.size());
      for (int j = 0; j < n; ++j) {
        branched[std::size_t(j)] = colors[std::size_t(j)] * 2 + (j == i ? 0 : 1);
      }
      run(std::move(branched));
    }
  }
};

}  // namespace

std::string canonical_certificate(const MolGraph& g) {
  CanonSearch s{g, {}, {}};
  s.run(initial_colors(g));
  return s.best;
}

std::vector<int> canonical_order(const MolGraph& g) {
  CanonSearch s{g, {}, {}};
  s.run(initial_colors(g));
  return s.best_colors;
}

}  // namespace cfdta
