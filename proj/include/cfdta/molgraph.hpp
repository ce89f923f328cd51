#pragma once

// Small-molecule graphs: heavy atoms only, implicit hydrogens, integer or
// aromatic bonds. Graphs are immutable after construction and always valid:
// connected, at least one atom, every valence within the element maximum.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace cfdta {

enum class Element : std::uint8_t { B, C, N, O, P, S, F, Cl, Br, I };

inline constexpr int kElementCount = 10;

int max_valence(Element e);
double atomic_mass(Element e);
std::string_view element_symbol(Element e);
std::optional<Element> element_from_symbol(std::string_view s);

struct Atom {
  Element element = Element::C;
  bool aromatic = false;

  friend bool operator==(const Atom&, const Atom&) = default;
};

enum class BondKind : std::uint8_t { single = 1, double_ = 2, triple = 3, aromatic = 4 };

// Order contribution doubled so the aromatic 1.5 stays integral.
int bond_order_twice(BondKind k);

struct Bond {
  int u = -1;
  int v = -1;
  BondKind kind = BondKind::single;
};

class MolGraph {
 public:
  // Validates everything; throws DataError on any violation (bad indices,
  // duplicate or self bonds, valence overflow, aromatic bond between
  // non-aromatic atoms, aromatic atom outside a ring, disconnected graph).
  MolGraph(std::vector<Atom> atoms, std::vector<Bond> bonds);

  int atom_count() const { return int(atoms_.size()); }
  const Atom& atom(int i) const { return atoms_[std::size_t(i)]; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }

  int degree(int i) const { return int(adj_[std::size_t(i)].size()); }
  // Indices into bonds() for the bonds incident to atom i.
  const std::vector<int>& incident_bonds(int i) const { return adj_[std::size_t(i)]; }
  // nullptr when no bond joins u and v.
  const Bond* find_bond(int u, int v) const;

  int bond_order_sum_twice(int i) const;
  // Valence consumed by explicit bonds. Aromatic bonds count 1.5 with the
  // total floored; aromatic N/O/P that would overflow count ring bonds as
  // 1.0 each instead (lone-pair donor form, e.g. furan O, N-substituted
  // pyrrole-type N).
  int explicit_valence(int i) const;
  int free_valence(int i) const { return max_valence(atom(i).element) - explicit_valence(i); }
  // Hydrogens are never stored; the implicit count is the free valence.
  int implicit_hydrogens(int i) const { return free_valence(i); }

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<int>> adj_;

  void validate() const;
};

// Range-checked free valence; throws RuntimeError on a bad atom index.
int atom_free_valence(const MolGraph& g, int atom);

class Fingerprint {
 public:
  explicit Fingerprint(int nbits = 2048);

  int nbits() const { return nbits_; }
  void set(int bit);
  void set_hashed(std::uint64_t id) { set(int(id % std::uint64_t(nbits_))); }
  bool test(int bit) const;
  int count() const;
  std::vector<int> set_bits() const;
  const std::vector<std::uint64_t>& words() const { return words_; }
  Eigen::VectorXd to_vector() const;

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;

 private:
  int nbits_;
  std::vector<std::uint64_t> words_;
};

// Circular substructure fingerprint. Atom identifiers start from
// (element, degree, explicit valence, free valence, aromatic) and are
// iterated `radius` times over sorted (bond kind, neighbor id) lists, so
// the result is invariant under atom reindexing.
Fingerprint compute_fingerprint(const MolGraph& g, int radius = 2, int nbits = 2048);

// |a AND b| / |a OR b|; two empty fingerprints count as identical (1.0).
double tanimoto(const Fingerprint& a, const Fingerprint& b);

// Isomorphism-invariant byte string: equal certificates for isomorphic
// graphs by construction; the refinement plus full tie-splitting search
// also separates every non-isomorphic pair we can afford to verify
// (exhaustively cross-checked against permutation search at small sizes).
std::string canonical_certificate(const MolGraph& g);

// Position of each atom in the certificate's canonical order.
std::vector<int> canonical_order(const MolGraph& g);

}  // namespace cfdta
