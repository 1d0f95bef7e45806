//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_OPTIM_HPP_
#define UNIMOMO_OPTIM_HPP_

#include "unimomo/params.hpp"

namespace unimomo {

// Adam with optional global-norm gradient clipping (clip disabled when
// max_grad_norm <= 0).
class Adam {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double max_grad_norm = 1.0;
  };

  explicit Adam(Options opts) : opts_(opts) {}

  // Applies one update from the accumulated gradients, then zeroes them.
  // Returns the pre-clip global gradient norm.
  double step(ParamStore& params);

  std::size_t steps_taken() const { return t_; }
  const Options& options() const { return opts_; }

 private:
  Options opts_;
  std::size_t t_ = 0;
};

}  // namespace unimomo

#endif  // UNIMOMO_OPTIM_HPP_
