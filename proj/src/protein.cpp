#include "cfdta/protein.hpp"

#include <algorithm>

namespace cfdta {

bool is_amino_acid(char aa) {
  return kAminoAcids.find(aa) != std::string_view::npos;
}

int residue_code(char aa) {
  auto at = kAminoAcids.find(aa);
  if (at == std::string_view::npos) {
    throw DataError(std::string("unknown residue '") + aa + "'");
  }
  return int(at) + 1;
}

ProteinSeq::ProteinSeq(std::string seq) : seq_(std::move(seq)) {
  if (seq_.empty()) throw DataError("empty protein sequence");
  for (std::size_t i = 0; i < seq_.size(); ++i) {
    if (!is_amino_acid(seq_[i])) {
      throw DataError(std::string("unknown residue '") + seq_[i] +
                      "' at position " + std::to_string(i));
    }
  }
}

char ProteinSeq::residue(int i) const {
  if (i < 0 || i >= size()) throw DataError("residue index out of range");
  return seq_[std::size_t(i)];
}

ProteinSeq ProteinSeq::with_residue(int i, char aa) const {
  if (i < 0 || i >= size()) throw DataError("residue index out of range");
  std::string s = seq_;
  s[std::size_t(i)] = aa;
  return ProteinSeq(std::move(s));
}

EncodedProtein encode_protein(const ProteinSeq& p) {
  EncodedProtein v = EncodedProtein::Zero(kEncodedProteinLength);
  const int n = std::min(p.size(), kEncodedProteinLength);
  for (int i = 0; i < n; ++i) v[i] = residue_code(p.residue(i));
  return v;
}

ProteinSeq mutate_to_alanine(const ProteinSeq& p, int i) {
  if (i < 0 || i >= p.size()) {
    throw DataError("mutation position " + std::to_string(i) + " out of range");
  }
  if (p.residue(i) == 'A') {
    throw DataError("position " + std::to_string(i) + " already is alanine");
  }
  return p.with_residue(i, 'A');
}

}  // namespace cfdta
