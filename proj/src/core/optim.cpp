//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "unimomo/optim.hpp"

#include <cmath>

#include "unimomo/kernels.hpp"

namespace unimomo {

double Adam::step(ParamStore& params) {
  const auto& K = kernels::active();

  double sq = 0.0;
  for (Param* p : params.all())
    sq += K.dot(p->grad.size(), p->grad.data(), p->grad.data());
  const double norm = std::sqrt(sq);

  double clip = 1.0;
  if (opts_.max_grad_norm > 0.0 && norm > opts_.max_grad_norm)
    clip = opts_.max_grad_norm / norm;

  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (Param* p : params.all()) {
    if (p->adam_m.size() == 0) {
      p->adam_m = Tensor(p->value.rows(), p->value.cols());
      p->adam_v = Tensor(p->value.rows(), p->value.cols());
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad.vec()[i] * clip;
      double& m = p->adam_m.vec()[i];
      double& v = p->adam_v.vec()[i];
      m = opts_.beta1 * m + (1.0 - opts_.beta1) * g;
      v = opts_.beta2 * v + (1.0 - opts_.beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      p->value.vec()[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
    p->grad.fill(0.0);
  }
  return norm;
}

}  // namespace unimomo
