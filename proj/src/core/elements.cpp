//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "unimomo/elements.hpp"

#include <cctype>

namespace unimomo {

const std::vector<ElementInfo>& element_table() {
  static const std::vector<ElementInfo> table = {
    {"H", 1, 1.20},  {"C", 4, 1.70},  {"N", 3, 1.55},  {"O", 2, 1.52},
    {"F", 1, 1.47},  {"P", 5, 1.80},  {"S", 6, 1.80},  {"Cl", 1, 1.75},
    {"B", 3, 1.92},  {"Se", 2, 1.90}, {"Br", 1, 1.85}, {"I", 1, 1.98},
  };
  return table;
}

const ElementInfo* find_element(const std::string& symbol) {
  for (const ElementInfo& e : element_table())
    if (e.symbol == symbol)
      return &e;
  return nullptr;
}

std::string normalize_element_symbol(const std::string& symbol) {
  if (symbol.empty())
    return symbol;
  std::string out;
  out.push_back(
      static_cast<char>(std::toupper(static_cast<unsigned char>(symbol[0]))));
  for (std::size_t i = 1; i < symbol.size(); ++i)
    out.push_back(
        static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[i]))));
  return find_element(out) != nullptr ? out : symbol;
}

}  // namespace unimomo
