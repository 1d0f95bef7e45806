//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_RANDOM_HPP_
#define UNIMOMO_RANDOM_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "unimomo/tensor.hpp"

namespace unimomo {

// Deterministic random stream with hierarchical splitting. Children derived
// via split(key) are independent of the parent's draw position, so a run is
// reproducible from the master seed regardless of evaluation order (e.g.
// parallel sampling workers each get split(candidate_index)).
//
// uniform() and normal() are implemented on top of raw 64-bit draws instead
// of std::*_distribution so that byte-identical sequences are produced on
// every platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  // Child stream with a seed derived from (this stream's seed, key).
  RandomStream split(std::uint64_t key) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Integer uniform in [0, n); n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n);
  // Standard normal via Box-Muller (second value cached).
  double normal();

  // n i.i.d. standard normals.
  std::vector<double> normal_vector(std::size_t n);
  Tensor normal_tensor(std::size_t rows, std::size_t cols);

  // Fisher-Yates permutation of [0, n).
  std::vector<std::size_t> permutation(std::size_t n);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace unimomo

#endif  // UNIMOMO_RANDOM_HPP_
