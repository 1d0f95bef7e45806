//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//
#include "fuzzmol.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "unimomo/elements.hpp"

namespace unimomo::test {

MolGraph random_molecule(RandomStream& rng, int min_atoms, int max_atoms) {
  const int n = min_atoms + static_cast<int>(rng.uniform_int(
      static_cast<std::uint64_t>(max_atoms - min_atoms + 1)));
  // Carbon-heavy element mix keeps plenty of merge opportunities.
  static const char* kPool[] = {"C", "C", "C", "C", "C", "N", "N", "O", "O", "S"};
  MolGraph mol;
  std::vector<int> remaining(n);
  for (int i = 0; i < n; ++i) {
    const std::string elem = kPool[rng.uniform_int(10)];
    Atom a;
    a.element = elem;
    a.name = elem + std::to_string(i);
    a.coord = {static_cast<double>(i), 0.37 * i + rng.uniform(0.0, 0.1),
               -0.21 * i};
    mol.atoms.push_back(a);
    remaining[i] = find_element(elem)->max_valence;
  }
  auto add_bond = [&](int p, int q, int order) {
    mol.bonds.push_back({static_cast<std::size_t>(p),
                         static_cast<std::size_t>(q), order});
    remaining[p] -= order;
    remaining[q] -= order;
  };
  // Spanning tree: attach each atom to an earlier one with spare valence.
  for (int v = 1; v < n; ++v) {
    std::vector<int> candidates;
    for (int u = 0; u < v; ++u)
      if (remaining[u] >= 1) candidates.push_back(u);
    if (candidates.empty()) {
      // Saturated prefix: drop the unattached tail atoms.
      mol.atoms.resize(v);
      remaining.resize(v);
      break;
    }
    const int u = candidates[rng.uniform_int(candidates.size())];
    int order = 1;
    const double r = rng.uniform();
    if (r < 0.12) order = 2;
    else if (r < 0.16) order = 3;
    order = std::min({order, remaining[u], remaining[v]});
    add_bond(u, v, std::max(order, 1));
  }
  // Ring closures between non-adjacent atoms with spare valence.
  const int n_now = static_cast<int>(mol.atoms.size());
  const int tries = static_cast<int>(rng.uniform_int(3));
  for (int t = 0; t < tries; ++t) {
    const int p = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_now)));
    const int q = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_now)));
    if (p == q || remaining[p] < 1 || remaining[q] < 1) continue;
    bool exists = false;
    for (const auto& b : mol.bonds)
      exists |= (static_cast<int>(b.p) == std::min(p, q) &&
                 static_cast<int>(b.q) == std::max(p, q)) ||
                (static_cast<int>(b.p) == std::max(p, q) &&
                 static_cast<int>(b.q) == std::min(p, q));
    if (!exists) add_bond(std::min(p, q), std::max(p, q), 1);
  }
  return mol;
}

}  // namespace unimomo::test
