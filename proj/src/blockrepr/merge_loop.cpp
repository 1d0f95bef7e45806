//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//
#include "merge_state.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>

#include "unimomo/errors.hpp"

namespace unimomo::blockrepr::detail {

MergeState::MergeState(const MolGraph& mol) {
  const std::size_t n = mol.atoms.size();
  elems.reserve(n);
  for (const auto& a : mol.atoms) elems.push_back(a.element);
  bonds = mol.bonds;
  adj.resize(n);
  for (const auto& b : bonds) {
    if (b.p >= n || b.q >= n || b.p == b.q)
      throw DataError("decomposition: bond references invalid atom index");
    adj[b.p].emplace_back(static_cast<int>(b.q), b.order);
    adj[b.q].emplace_back(static_cast<int>(b.p), b.order);
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
  rings = sssr(n, bonds);
  frags.resize(n);
  frag_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    frags[i] = {static_cast<int>(i)};
    frag_of[i] = static_cast<int>(i);
  }
}

std::pair<std::vector<std::string>, std::vector<IntraBond>>
MergeState::induced_subgraph(const std::vector<int>& atoms) const {
  std::vector<int> local(elems.size(), -1);
  std::vector<std::string> sub_elems;
  sub_elems.reserve(atoms.size());
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    local[atoms[k]] = static_cast<int>(k);
    sub_elems.push_back(elems[atoms[k]]);
  }
  std::vector<IntraBond> sub_bonds;
  for (const auto& b : bonds) {
    const int p = local[b.p], q = local[b.q];
    if (p >= 0 && q >= 0)
      sub_bonds.push_back({static_cast<std::size_t>(p),
                           static_cast<std::size_t>(q), b.order});
  }
  return {std::move(sub_elems), std::move(sub_bonds)};
}

std::vector<std::pair<int, int>> MergeState::adjacent_pairs() const {
  std::set<std::pair<int, int>> pairs;
  for (const auto& b : bonds) {
    const int fi = frag_of[b.p], fj = frag_of[b.q];
    if (fi != fj) pairs.insert({std::min(fi, fj), std::max(fi, fj)});
  }
  return {pairs.begin(), pairs.end()};
}

namespace {

// Sorted ring ids touched by a fragment.
std::vector<int> ring_ids(const std::vector<std::vector<int>>& rings,
                          const std::vector<int>& atoms) {
  std::vector<int> ids;
  for (std::size_t r = 0; r < rings.size(); ++r) {
    bool hit = false;
    for (int a : atoms) {
      if (std::binary_search(rings[r].begin(), rings[r].end(), a)) {
        hit = true;
        break;
      }
    }
    if (hit) ids.push_back(static_cast<int>(r));
  }
  return ids;
}

bool share_ring(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j]) ++i; else ++j;
  }
  return false;
}

}  // namespace

void MergeState::merge(int i, int j) {
  std::vector<int> merged;
  merged.reserve(frags[i].size() + frags[j].size());
  std::merge(frags[i].begin(), frags[i].end(), frags[j].begin(), frags[j].end(),
             std::back_inserter(merged));
  frags[i] = std::move(merged);
  frags.erase(frags.begin() + j);
  for (std::size_t f = 0; f < frags.size(); ++f)
    for (int a : frags[f]) frag_of[a] = static_cast<int>(f);
}

bool merge_step(MergeState& st, const Vocabulary& vocab) {
  struct Choice {
    std::uint64_t freq;
    std::string key;
    int i, j;
  };
  const auto pairs = st.adjacent_pairs();
  // Per fragment: the set of adjacent fragments sharing an SSSR ring with
  // it. A pair is skipped when exactly one side has same-ring neighbors that
  // do not include the other side (ring-priority rule: merge within rings
  // before attaching substituents).
  const std::size_t n_frags = st.frags.size();
  std::vector<std::vector<int>> ids(n_frags);
  for (std::size_t f = 0; f < n_frags; ++f)
    ids[f] = ring_ids(st.rings, st.frags[f]);
  std::vector<std::set<int>> ring_nbrs(n_frags);
  for (const auto& [i, j] : pairs) {
    if (share_ring(ids[i], ids[j])) {
      ring_nbrs[i].insert(j);
      ring_nbrs[j].insert(i);
    }
  }
  auto skip = [&](int i, int j) {
    const bool cond_i = !ring_nbrs[i].empty() && ring_nbrs[i].count(j) == 0;
    const bool cond_j = !ring_nbrs[j].empty() && ring_nbrs[j].count(i) == 0;
    return cond_i != cond_j;
  };
  bool has_best = false;
  Choice best{0, "", 0, 0};
  for (const auto& [i, j] : pairs) {
    if (skip(i, j)) continue;
    std::vector<int> atoms;
    std::merge(st.frags[i].begin(), st.frags[i].end(), st.frags[j].begin(),
               st.frags[j].end(), std::back_inserter(atoms));
    auto [sub_elems, sub_bonds] = st.induced_subgraph(atoms);
    const std::string key = canonical_key(sub_elems, sub_bonds);
    const FragmentEntry* entry = vocab.find(key);
    if (entry == nullptr || entry->is_amino_acid) continue;
    const Choice c{entry->frequency, key, i, j};
    const bool better =
        !has_best || c.freq > best.freq ||
        (c.freq == best.freq &&
         (c.key < best.key ||
          (c.key == best.key &&
           std::pair(c.i, c.j) < std::pair(best.i, best.j))));
    if (better) {
      best = c;
      has_best = true;
    }
  }
  if (!has_best) return false;
  st.merge(best.i, best.j);
  return true;
}

void merge_to_fixpoint(MergeState& st, const Vocabulary& vocab) {
  while (merge_step(st, vocab)) {
  }
}

}  // namespace unimomo::blockrepr::detail
