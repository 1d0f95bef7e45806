//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_PARAMS_HPP_
#define UNIMOMO_PARAMS_HPP_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "unimomo/random.hpp"
#include "unimomo/tensor.hpp"

namespace unimomo {

// Trainable tensor with its accumulated gradient and optimizer slots.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  // Adam first/second moment estimates; sized on first optimizer step.
  Tensor adam_m, adam_v;
};

// Named collection of parameters with stable addresses. Iteration order is
// creation order so optimizer updates and checkpoints are deterministic.
class ParamStore {
 public:
  // Creates a zero-initialized parameter; name must be unused.
  Param& create(const std::string& name, std::size_t rows, std::size_t cols);
  // Kaiming-uniform initialization with bound sqrt(1 / fan_in).
  Param& create_linear_weight(const std::string& name, std::size_t fan_in,
                              std::size_t fan_out, RandomStream& rng);

  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Param*>& all() { return order_; }
  const std::vector<Param*>& all() const { return order_; }

  void zero_grad();
  // Total number of scalar parameters.
  std::size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Param>> owned_;
  std::vector<Param*> order_;
  std::map<std::string, Param*> by_name_;
};

}  // namespace unimomo

#endif  // UNIMOMO_PARAMS_HPP_
