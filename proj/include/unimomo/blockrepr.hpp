//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//
// Block-level molecular representation: fragment vocabularies, ring-aware
// principal-subgraph decomposition, binding-site extraction, and prompt
// assignment.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "unimomo/blockgraph.hpp"

namespace unimomo::blockrepr {

// ---------------------------------------------------------------------------
// Canonical fragment keys
// ---------------------------------------------------------------------------

// Computes a canonical kekulized SMILES-style key for a connected fragment.
// The key is invariant under atom relabeling and bond-list reordering: it is
// the lexicographically smallest DFS string over all canonical labelings
// produced by iterative neighborhood refinement with individualization.
//
// `elements[k]` is the element symbol of atom k; `bonds` hold 0-based atom
// indices with orders in {1, 2, 3}. If `canonical_order` is non-null it
// receives the atom indices in canonical order (position -> original index)
// for the labeling that produced the key.
//
// Throws DataError if the fragment is empty or disconnected.
std::string canonical_key(const std::vector<std::string>& elements,
                          const std::vector<IntraBond>& bonds,
                          std::vector<int>* canonical_order = nullptr);

// Convenience overload for a whole molecular graph.
std::string canonical_key(const MolGraph& mol,
                          std::vector<int>* canonical_order = nullptr);

// ---------------------------------------------------------------------------
// Ring perception
// ---------------------------------------------------------------------------

// Smallest set of smallest rings (minimum cycle basis) of the atom graph.
// Each ring is returned as a sorted list of atom indices. Deterministic:
// candidate cycles are ranked by (length, edge-set) before greedy selection.
std::vector<std::vector<int>> sssr(std::size_t n_atoms,
                                   const std::vector<IntraBond>& bonds);
std::vector<std::vector<int>> sssr(const MolGraph& mol);

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

struct FragmentEntry {
  std::string key;                  // canonical key or 3-letter residue code
  std::uint64_t frequency = 0;      // merge-time count; 0 for amino acids
  std::vector<std::string> atoms;   // element symbols in canonical order
  std::vector<IntraBond> bonds;     // indices into `atoms`
  bool is_amino_acid = false;
};

// Ordered collection of block vocabulary entries. Entries keep insertion
// order (stable ids for downstream models) and are unique by key. The 20
// standard amino acids are always present; they do not count as fragment
// entries.
class Vocabulary {
 public:
  // Empty vocabulary pre-seeded with the 20 standard amino acids.
  static Vocabulary with_amino_acids();

  void add(FragmentEntry entry);
  const FragmentEntry* find(const std::string& key) const;
  bool contains(const std::string& key) const { return find(key) != nullptr; }
  // Index of a key in insertion order; nullopt when absent.
  std::optional<std::size_t> index_of(const std::string& key) const;

  const std::vector<FragmentEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  // Number of non-amino-acid (fragment) entries.
  std::size_t fragment_count() const { return fragment_count_; }

 private:
  std::vector<FragmentEntry> entries_;
  std::size_t fragment_count_ = 0;
};

// Text file format, one entry per line:
//   KEY<TAB>FREQUENCY<TAB>ATOMS<TAB>BONDS
// ATOMS is a comma-separated element list ("C,C,O"); BONDS is a
// semicolon-separated "p-q:order" list ("0-1:1;1-2:2") or "-" when the
// fragment has no bonds. Amino-acid entries use their three-letter code as
// KEY with FREQUENCY=0.
void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);

// Learns a fragment vocabulary from a corpus of heavy-atom molecular graphs.
// Single-atom fragments are seeded with their total occurrence counts; each
// round counts every adjacent-fragment union key across the corpus, adds the
// globally most frequent new key (frequency = that count), and re-merges the
// corpus incrementally until `target_size` fragment entries exist. Amino-acid
// entries are present independently of the corpus and do not count toward
// `target_size`.
//
// Throws DataError on an empty corpus or an unreachable target, ConfigError
// when target_size is below the number of element types present.
Vocabulary extract_vocabulary(const std::vector<MolGraph>& corpus,
                              std::size_t target_size);

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

// Ring-prioritized principal-subgraph decomposition. Starting from one
// fragment per atom, repeatedly merges the adjacent fragment pair whose
// union's canonical key has the highest recorded vocabulary frequency,
// skipping pairs where exactly one side still has a neighboring fragment in
// a shared ring (so rings merge before their substituents). Ties break on
// the lexicographically smallest key, then the smallest fragment index pair.
// Stops when no adjacent union is a vocabulary entry.
//
// Output blocks partition the atoms; each block's atoms follow the canonical
// order of its vocabulary key, and bonds crossing block boundaries become
// inter-block bonds. If `atom_map` is non-null it receives, for every input
// atom index, its (block, position) in the result.
//
// Throws DataError when an atom's element has no single-atom vocabulary
// entry (the message names the element).
BlockGraph decompose(const MolGraph& mol, const Vocabulary& vocab,
                     std::vector<std::pair<std::size_t, std::size_t>>* atom_map = nullptr);

// Decomposes a residue-annotated chain: blocks whose block_type is a
// standard amino-acid code stay single blocks; every other block is replaced
// by decompose() of its atom graph. Inter-block bonds (e.g. peptide bonds)
// are remapped onto the refined blocks.
//
// Throws DataError on an empty chain; propagates decompose errors.
BlockGraph decompose_polymer(const BlockGraph& chain, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Binding-site extraction & prompts
// ---------------------------------------------------------------------------

struct SiteSelection {
  BlockGraph site;                 // kept target blocks, bonds remapped
  std::vector<std::size_t> kept;   // indices into target.blocks
  bool empty_site = false;         // warning flag: nothing within radius
};

// Keeps the target blocks whose reference point lies within `radius` of any
// binder block's reference point. A block's reference point is its CB atom
// when present, otherwise its centroid.
SiteSelection select_binding_site(const BlockGraph& target,
                                  const BlockGraph& binder,
                                  double radius = 10.0);

enum class PromptMode {
  aa_only,  // every block prompt = 1: restrict generation to amino acids
  free_form // every block prompt = 0: unrestricted fragment generation
};

BlockGraph assign_prompts(BlockGraph graph, PromptMode mode);

}  // namespace unimomo::blockrepr
