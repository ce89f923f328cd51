#pragma once

// Single-step edit moves. Drug edits follow the add-atom / add-bond /
// remove-bond scheme over explicit integer bond orders; aromatic bonds are
// not on that ladder and stay untouched. Protein edits are single-point
// alanine substitutions at every non-alanine position.

#include <optional>
#include <string>
#include <vector>

#include "cfdta/molgraph.hpp"
#include "cfdta/protein.hpp"

namespace cfdta {

struct DrugAction {
  enum class Kind { add_atom, add_bond, remove_bond };

  Kind kind = Kind::add_atom;
  Element element = Element::C;  // add_atom payload
  int u = -1;                    // attach site or bond endpoint, reference indexing
  int v = -1;                    // second bond endpoint
  MolGraph result;
  std::string certificate;       // of result; dedup and ordering key

  std::string describe() const;
};

struct ProteinAction {
  int position = -1;             // 0-based
  bool beyond_encoder = false;   // true when the encoding window cannot see it
  ProteinSeq result;
};

// At least one side must be present.
struct JointAction {
  std::optional<DrugAction> drug;
  std::optional<ProteinAction> protein;

  JointAction(std::optional<DrugAction> d, std::optional<ProteinAction> p);
};

// Every valid one-step edit, deduplicated by result certificate and sorted
// by it (order-stable across runs). Admissible elements: which atoms
// add_atom may introduce; must be nonempty.
std::vector<DrugAction> enumerate_drug_actions(const MolGraph& g,
                                               const std::vector<Element>& admissible);

// One action per non-alanine position, ascending. Empty for all-alanine
// input; callers that need a nonempty space raise their own error.
std::vector<ProteinAction> enumerate_protein_actions(const ProteinSeq& p);

}  // namespace cfdta
