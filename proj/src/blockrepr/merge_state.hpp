//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//
// Internal fragment-merging machinery shared by vocabulary extraction and
// decomposition: a partition of atoms into fragments, ring-aware pair
// filtering, and the greedy highest-frequency merge step.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "unimomo/blockgraph.hpp"
#include "unimomo/blockrepr.hpp"

namespace unimomo::blockrepr::detail {

// Atom-level view of a molecule with fragment partition state.
struct MergeState {
  // Immutable molecule view.
  std::vector<std::string> elems;
  std::vector<IntraBond> bonds;
  std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, order)
  std::vector<std::vector<int>> rings;                // SSSR atom sets

  // Mutable partition: fragments hold sorted atom indices.
  std::vector<std::vector<int>> frags;
  std::vector<int> frag_of;  // atom index -> fragment index

  explicit MergeState(const MolGraph& mol);

  // Induced subgraph of a sorted atom set: elements plus bonds with local
  // indices into that set.
  std::pair<std::vector<std::string>, std::vector<IntraBond>>
  induced_subgraph(const std::vector<int>& atoms) const;

  // Adjacent fragment index pairs (i < j), sorted.
  std::vector<std::pair<int, int>> adjacent_pairs() const;

  // Merges fragment j into i and erases j.
  void merge(int i, int j);
};

// One greedy merge round: among adjacent pairs passing the ring filter whose
// union key is a fragment vocabulary entry, merges the pair with the highest
// recorded frequency (ties: lexicographically smallest key, then smallest
// index pair). Returns false when no pair qualifies.
bool merge_step(MergeState& st, const Vocabulary& vocab);

// Runs merge_step until exhaustion.
void merge_to_fixpoint(MergeState& st, const Vocabulary& vocab);

}  // namespace unimomo::blockrepr::detail
