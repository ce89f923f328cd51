#pragma once

// Line notation for the molgraph model. The accepted subset: organic-subset
// atoms B C N O P S F Cl Br I, aromatic b c n o p s, bonds - = #, branches,
// ring closures 1-9 and %nn, bracket atoms [element, optional H count,
// optional charge in [-2,+2]]. Stereo marks, isotopes, wildcards and dot
// disconnections are rejected with the byte offset. Bracket H counts and
// charges are validated, then dropped: hydrogens are implicit by free
// valence and the graph stores no charge.

#include <string>
#include <string_view>

#include "cfdta/molgraph.hpp"

namespace cfdta {

// Throws ParseError (with byte offset) on any lexical, grammatical, or
// chemical (valence, aromaticity, ring bookkeeping) violation.
MolGraph parse_smiles(std::string_view s);

// Deterministic writer: depth-first from the atom ranked first by
// canonical_order, neighbors in canonical rank order. Output always
// reparses to a graph isomorphic to the input.
std::string write_smiles(const MolGraph& g);

}  // namespace cfdta
