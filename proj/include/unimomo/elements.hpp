//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_ELEMENTS_HPP_
#define UNIMOMO_ELEMENTS_HPP_

#include <string>
#include <vector>

namespace unimomo {

// Registered chemical elements. Hydrogens are accepted by parsers but dropped
// at ingestion, so all downstream code sees heavy atoms only.
struct ElementInfo {
  std::string symbol;
  // Maximum total bond order for a neutral atom.
  int max_valence;
  // Van der Waals radius, Angstrom.
  double vdw_radius;
};

// Core set H,C,N,O,F,P,S,Cl plus the extension set B,Se,Br,I.
const std::vector<ElementInfo>& element_table();

// nullptr when the symbol is not registered. Case-sensitive ("Cl", not "CL").
const ElementInfo* find_element(const std::string& symbol);

// Normalizes common upper-case spellings ("CL" -> "Cl"); returns the input
// unchanged when no rule applies.
std::string normalize_element_symbol(const std::string& symbol);

}  // namespace unimomo

#endif  // UNIMOMO_ELEMENTS_HPP_
