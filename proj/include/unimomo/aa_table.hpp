//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_AA_TABLE_HPP_
#define UNIMOMO_AA_TABLE_HPP_

#include <string>
#include <tuple>
#include <vector>

#include "unimomo/blockgraph.hpp"

namespace unimomo {

// Canonical heavy-atom template of a standard amino-acid residue, with
// kekulized bond orders (backbone C=O double, aromatic rings alternating).
struct ResidueTemplate {
  std::string code3;
  char code1;
  // (atom name, element symbol); backbone N, CA, C, O first.
  std::vector<std::pair<std::string, std::string>> atoms;
  // (name, name, order)
  std::vector<std::tuple<std::string, std::string, int>> bonds;
};

// The 20 standard residues, alphabetical by three-letter code.
const std::vector<ResidueTemplate>& amino_acids();

// nullptr when code3 is not a standard residue.
const ResidueTemplate* find_residue(const std::string& code3);

// 'X' for unknown codes.
char one_letter(const std::string& code3);

// Block with the template's atoms (zero coordinates) and intra bonds.
Block residue_block(const ResidueTemplate& rt);

}  // namespace unimomo

#endif  // UNIMOMO_AA_TABLE_HPP_
