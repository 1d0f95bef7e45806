//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//
#include "unimomo/blockrepr.hpp"

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "merge_state.hpp"
#include "unimomo/aa_table.hpp"
#include "unimomo/errors.hpp"

namespace unimomo::blockrepr {

BlockGraph decompose(const MolGraph& mol, const Vocabulary& vocab,
                     std::vector<std::pair<std::size_t, std::size_t>>* atom_map) {
  BlockGraph out;
  if (atom_map != nullptr) atom_map->assign(mol.atoms.size(), {0, 0});
  if (mol.atoms.empty()) return out;

  // Every element must exist as a single-atom fragment entry.
  std::set<std::string> elems;
  for (const auto& a : mol.atoms) elems.insert(a.element);
  for (const auto& elem : elems) {
    const FragmentEntry* e = vocab.find(canonical_key({elem}, {}));
    if (e == nullptr || e->is_amino_acid)
      throw DataError("decomposition error: element '" + elem +
                      "' is not in the vocabulary");
  }

  detail::MergeState st(mol);
  detail::merge_to_fixpoint(st, vocab);

  // Fragments stay sorted by smallest original atom index (merges fold the
  // higher-index fragment into the lower), so block order is deterministic.
  std::vector<std::pair<std::size_t, std::size_t>> where(mol.atoms.size());
  for (const auto& frag : st.frags) {
    auto [sub_elems, sub_bonds] = st.induced_subgraph(frag);
    std::vector<int> order;
    const std::string key = canonical_key(sub_elems, sub_bonds, &order);
    std::vector<int> rank(order.size());
    for (std::size_t k = 0; k < order.size(); ++k)
      rank[order[k]] = static_cast<int>(k);

    Block block;
    block.block_type = key;
    block.prompt = 0;
    block.atoms.reserve(frag.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      const int orig = frag[order[k]];
      block.atoms.push_back(mol.atoms[orig]);
      where[orig] = {out.blocks.size(), k};
    }
    for (const auto& b : sub_bonds) {
      auto p = static_cast<std::size_t>(rank[b.p]);
      auto q = static_cast<std::size_t>(rank[b.q]);
      if (p > q) std::swap(p, q);
      block.intra_bonds.push_back({p, q, b.order});
    }
    std::sort(block.intra_bonds.begin(), block.intra_bonds.end(),
              [](const IntraBond& a, const IntraBond& b) {
                return std::tie(a.p, a.q) < std::tie(b.p, b.q);
              });
    out.blocks.push_back(std::move(block));
  }

  for (const auto& b : mol.bonds) {
    auto [bi, pi] = where[b.p];
    auto [bj, pj] = where[b.q];
    if (bi == bj) continue;
    if (bi > bj) {
      std::swap(bi, bj);
      std::swap(pi, pj);
    }
    out.inter_bonds.push_back({bi, pi, bj, pj, b.order});
  }
  std::sort(out.inter_bonds.begin(), out.inter_bonds.end(),
            [](const InterBond& a, const InterBond& b) {
              return std::tie(a.i, a.p, a.j, a.q) <
                     std::tie(b.i, b.p, b.j, b.q);
            });

  if (atom_map != nullptr) *atom_map = where;
  return out;
}

BlockGraph decompose_polymer(const BlockGraph& chain, const Vocabulary& vocab) {
  if (chain.blocks.empty())
    throw DataError("polymer decomposition: empty chain");

  BlockGraph out;
  // (old block, old atom) -> (new block, new atom)
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> where(
      chain.blocks.size());
  for (std::size_t i = 0; i < chain.blocks.size(); ++i) {
    const Block& block = chain.blocks[i];
    if (find_residue(block.block_type) != nullptr) {
      where[i].resize(block.atoms.size());
      for (std::size_t p = 0; p < block.atoms.size(); ++p)
        where[i][p] = {out.blocks.size(), p};
      out.blocks.push_back(block);
      continue;
    }
    MolGraph sub;
    sub.atoms = block.atoms;
    sub.bonds = block.intra_bonds;
    std::vector<std::pair<std::size_t, std::size_t>> atom_map;
    BlockGraph parts = decompose(sub, vocab, &atom_map);
    const std::size_t offset = out.blocks.size();
    for (auto& nb : parts.blocks) {
      nb.prompt = block.prompt;
      out.blocks.push_back(std::move(nb));
    }
    for (const auto& ib : parts.inter_bonds)
      out.inter_bonds.push_back(
          {ib.i + offset, ib.p, ib.j + offset, ib.q, ib.order});
    where[i].resize(block.atoms.size());
    for (std::size_t p = 0; p < block.atoms.size(); ++p)
      where[i][p] = {atom_map[p].first + offset, atom_map[p].second};
  }

  for (const auto& ib : chain.inter_bonds) {
    if (ib.i >= chain.blocks.size() || ib.j >= chain.blocks.size() ||
        ib.p >= chain.blocks[ib.i].atoms.size() ||
        ib.q >= chain.blocks[ib.j].atoms.size())
      throw DataError("polymer decomposition: inter-block bond out of range");
    auto [bi, pi] = where[ib.i][ib.p];
    auto [bj, pj] = where[ib.j][ib.q];
    if (bi == bj) continue;  // decomposition could merge only within a block
    if (bi > bj) {
      std::swap(bi, bj);
      std::swap(pi, pj);
    }
    out.inter_bonds.push_back({bi, pi, bj, pj, ib.order});
  }
  std::sort(out.inter_bonds.begin(), out.inter_bonds.end(),
            [](const InterBond& a, const InterBond& b) {
              return std::tie(a.i, a.p, a.j, a.q) <
                     std::tie(b.i, b.p, b.j, b.q);
            });
  return out;
}

namespace {

Vec3 reference_point(const Block& b) {
  for (const auto& a : b.atoms)
    if (a.name == "CB") return a.coord;
  return block_centroid(b);
}

}  // namespace

SiteSelection select_binding_site(const BlockGraph& target,
                                  const BlockGraph& binder, double radius) {
  std::vector<Vec3> binder_refs;
  binder_refs.reserve(binder.blocks.size());
  for (const auto& b : binder.blocks) binder_refs.push_back(reference_point(b));

  SiteSelection sel;
  std::vector<std::size_t> new_index(target.blocks.size(), SIZE_MAX);
  for (std::size_t i = 0; i < target.blocks.size(); ++i) {
    const Vec3 ref = reference_point(target.blocks[i]);
    bool keep = false;
    for (const auto& br : binder_refs) {
      if (distance(ref, br) <= radius) {
        keep = true;
        break;
      }
    }
    if (keep) {
      new_index[i] = sel.site.blocks.size();
      sel.kept.push_back(i);
      sel.site.blocks.push_back(target.blocks[i]);
    }
  }
  for (const auto& ib : target.inter_bonds) {
    const auto ni = new_index[ib.i], nj = new_index[ib.j];
    if (ni == SIZE_MAX || nj == SIZE_MAX) continue;
    sel.site.inter_bonds.push_back({ni, ib.p, nj, ib.q, ib.order});
  }
  sel.empty_site = sel.site.blocks.empty();
  return sel;
}

BlockGraph assign_prompts(BlockGraph graph, PromptMode mode) {
  const int value = (mode == PromptMode::aa_only) ? 1 : 0;
  for (auto& b : graph.blocks) b.prompt = value;
  return graph;
}

}  // namespace unimomo::blockrepr
