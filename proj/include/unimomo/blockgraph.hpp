//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_BLOCKGRAPH_HPP_
#define UNIMOMO_BLOCKGRAPH_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace unimomo {

using Vec3 = std::array<double, 3>;

struct Atom {
  std::string element;  // registered element symbol
  std::string name;     // free-form label ("CA", "C1", ...)
  Vec3 coord = {0.0, 0.0, 0.0};
};

// Bond between two atoms of the same block (local atom indices).
struct IntraBond {
  std::size_t p = 0, q = 0;
  int order = 1;  // 1..3
};

// Bond between atom p of block i and atom q of block j.
struct InterBond {
  std::size_t i = 0, p = 0, j = 0, q = 0;
  int order = 1;
};

// A unit of the block graph: one standard amino acid or one fragment.
struct Block {
  std::string block_type;  // vocabulary key; empty = undetermined
  int prompt = 0;          // 1 restricts decoding to amino acids
  std::vector<Atom> atoms;
  std::vector<IntraBond> intra_bonds;
};

struct BlockGraph {
  std::vector<Block> blocks;
  std::vector<InterBond> inter_bonds;

  std::size_t atom_count() const;
  bool empty() const { return blocks.empty(); }
};

// A binder/target pair; binder absent for sampling-only records.
struct ComplexRecord {
  std::string id;
  std::optional<BlockGraph> binder;
  BlockGraph target;
  std::map<std::string, std::string> metadata;
};

// Flat atom-level graph (decomposition input, metric substrate).
struct MolGraph {
  std::vector<Atom> atoms;
  std::vector<IntraBond> bonds;
};

// Unweighted centroid of the block's heavy atoms.
Vec3 block_centroid(const Block& b);

// Flattens blocks plus intra/inter bonds into one atom graph. Atom order is
// block order, atoms in block order; returns per-block offsets when
// `offsets` is non-null.
MolGraph flatten(const BlockGraph& g, std::vector<std::size_t>* offsets = nullptr);

// Throws DataError when indices dangle, orders leave {1,2,3}, prompts leave
// {0,1}, elements are unregistered, coordinates are non-finite, valency caps
// are exceeded, or the union atom graph has duplicate edges.
void validate(const BlockGraph& g, const std::string& context);

inline double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace unimomo

#endif  // UNIMOMO_BLOCKGRAPH_HPP_
