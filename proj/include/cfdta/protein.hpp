#pragma once

// Protein sequences over the 20 standard amino acids, plus the fixed-width
// integer encoding used as the model-facing observation: residue codes 1..20
// in alphabetical order, zero padding, hard truncation at 1000 positions.

#include <string>
#include <string_view>

#include <Eigen/Core>

#include "cfdta/error.hpp"

namespace cfdta {

inline constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr int kEncodedProteinLength = 1000;

// 1..20 by alphabetical rank; throws DataError for anything else.
int residue_code(char aa);
bool is_amino_acid(char aa);

class ProteinSeq {
 public:
  // Validates every residue; throws DataError naming the first bad position.
  explicit ProteinSeq(std::string seq);

  const std::string& str() const { return seq_; }
  int size() const { return int(seq_.size()); }
  char residue(int i) const;

  // Copy with position i replaced; errors on range or same-residue no-ops
  // are the caller's concern only for range (same residue is permitted).
  ProteinSeq with_residue(int i, char aa) const;

  friend bool operator==(const ProteinSeq&, const ProteinSeq&) = default;

 private:
  std::string seq_;
};

using EncodedProtein = Eigen::VectorXi;

// Always exactly kEncodedProteinLength entries; positions past the window
// are invisible to every consumer of this encoding.
EncodedProtein encode_protein(const ProteinSeq& p);

// Alanine substitution. Throws DataError when i is out of range or the
// residue already is alanine.
ProteinSeq mutate_to_alanine(const ProteinSeq& p, int i);

}  // namespace cfdta
