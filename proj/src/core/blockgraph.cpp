//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "unimomo/blockgraph.hpp"

#include <cmath>
#include <set>
#include <string>

#include "unimomo/elements.hpp"
#include "unimomo/errors.hpp"

namespace unimomo {

std::size_t BlockGraph::atom_count() const {
  std::size_t n = 0;
  for (const Block& b : blocks)
    n += b.atoms.size();
  return n;
}

Vec3 block_centroid(const Block& b) {
  Vec3 c = {0.0, 0.0, 0.0};
  if (b.atoms.empty())
    return c;
  for (const Atom& a : b.atoms)
    for (int d = 0; d < 3; ++d)
      c[d] += a.coord[d];
  for (int d = 0; d < 3; ++d)
    c[d] /= static_cast<double>(b.atoms.size());
  return c;
}

MolGraph flatten(const BlockGraph& g, std::vector<std::size_t>* offsets) {
  MolGraph mol;
  std::vector<std::size_t> off;
  off.reserve(g.blocks.size());
  for (const Block& b : g.blocks) {
    off.push_back(mol.atoms.size());
    mol.atoms.insert(mol.atoms.end(), b.atoms.begin(), b.atoms.end());
  }
  for (std::size_t i = 0; i < g.blocks.size(); ++i)
    for (const IntraBond& bd : g.blocks[i].intra_bonds)
      mol.bonds.push_back({off[i] + bd.p, off[i] + bd.q, bd.order});
  for (const InterBond& bd : g.inter_bonds)
    mol.bonds.push_back({off[bd.i] + bd.p, off[bd.j] + bd.q, bd.order});
  if (offsets != nullptr)
    *offsets = std::move(off);
  return mol;
}

void validate(const BlockGraph& g, const std::string& context) {
  auto fail = [&](const std::string& what) {
    throw DataError("integrity error: " + context + ": " + what);
  };

  for (std::size_t i = 0; i < g.blocks.size(); ++i) {
    const Block& b = g.blocks[i];
    const std::string where = "block " + std::to_string(i);
    if (b.prompt != 0 && b.prompt != 1)
      fail(where + ": prompt must be 0 or 1");
    for (const Atom& a : b.atoms) {
      if (find_element(a.element) == nullptr)
        fail(where + ": unknown element '" + a.element + "'");
      for (double v : a.coord)
        if (!std::isfinite(v))
          fail(where + ": non-finite coordinate");
    }
    for (const IntraBond& bd : b.intra_bonds) {
      if (bd.p >= b.atoms.size() || bd.q >= b.atoms.size())
        fail(where + ": intra-bond atom index out of range");
      if (bd.p == bd.q)
        fail(where + ": intra-bond endpoints must differ");
      if (bd.order < 1 || bd.order > 3)
        fail(where + ": bond order must be 1, 2, or 3");
    }
  }

  for (const InterBond& bd : g.inter_bonds) {
    if (bd.i >= g.blocks.size() || bd.j >= g.blocks.size())
      fail("inter-bond block index out of range");
    if (bd.i == bd.j)
      fail("inter-bond must connect distinct blocks");
    if (bd.p >= g.blocks[bd.i].atoms.size() ||
        bd.q >= g.blocks[bd.j].atoms.size())
      fail("inter-bond atom index out of range");
    if (bd.order < 1 || bd.order > 3)
      fail("inter-bond order must be 1, 2, or 3");
  }

  // Simple-graph and valency checks on the union atom graph.
  const MolGraph mol = flatten(g);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<int> used(mol.atoms.size(), 0);
  for (const IntraBond& bd : mol.bonds) {
    auto key = std::minmax(bd.p, bd.q);
    if (!seen.insert(key).second)
      fail("duplicate bond between atoms " + std::to_string(key.first) +
           " and " + std::to_string(key.second));
    used[bd.p] += bd.order;
    used[bd.q] += bd.order;
  }
  for (std::size_t a = 0; a < mol.atoms.size(); ++a) {
    const ElementInfo* e = find_element(mol.atoms[a].element);
    if (used[a] > e->max_valence)
      fail("atom " + std::to_string(a) + " (" + e->symbol + ") exceeds valency " +
           std::to_string(e->max_valence));
  }
}

}  // namespace unimomo
