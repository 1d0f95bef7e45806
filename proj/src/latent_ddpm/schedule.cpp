//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "unimomo/errors.hpp"
#include "unimomo/latent_ddpm.hpp"

namespace unimomo {

double NoiseSchedule::beta(std::size_t t) const {
  if (t < 1 || t > T)
    throw ConfigError("schedule: beta step " + std::to_string(t) +
                      " outside 1.." + std::to_string(T));
  return betas[t - 1];
}

double NoiseSchedule::alpha(std::size_t t) const {
  if (t < 1 || t > T)
    throw ConfigError("schedule: alpha step " + std::to_string(t) +
                      " outside 1.." + std::to_string(T));
  return alphas[t - 1];
}

double NoiseSchedule::alpha_bar(std::size_t t) const {
  if (t > T)
    throw ConfigError("schedule: alpha_bar step " + std::to_string(t) +
                      " outside 0.." + std::to_string(T));
  return alpha_bars[t];
}

void NoiseSchedule::validate() const {
  if (T == 0) throw ConfigError("schedule: T must be at least 1");
  if (betas.size() != T || alphas.size() != T || alpha_bars.size() != T + 1)
    throw ConfigError("schedule: vector sizes must be T, T, and T+1");
  if (alpha_bars[0] != 1.0)
    throw ConfigError("schedule: alpha_bar(0) must be exactly 1");
  double prod = 1.0;
  for (std::size_t t = 1; t <= T; ++t) {
    const double b = betas[t - 1];
    if (!(b > 0.0 && b < 1.0))
      throw ConfigError("schedule: beta at step " + std::to_string(t) +
                        " outside (0,1)");
    if (alphas[t - 1] != 1.0 - b)
      throw ConfigError("schedule: alpha at step " + std::to_string(t) +
                        " must equal 1 - beta");
    prod *= alphas[t - 1];
    if (std::abs(alpha_bars[t] - prod) > 1e-10)
      throw ConfigError("schedule: alpha_bar at step " + std::to_string(t) +
                        " deviates from the running product");
    if (!(alpha_bars[t] < alpha_bars[t - 1]))
      throw ConfigError("schedule: alpha_bar must be strictly decreasing");
  }
}

NoiseSchedule cosine_schedule(std::size_t T, double s) {
  if (T == 0) throw ConfigError("schedule: T must be at least 1");
  if (!(s > 0.0)) throw ConfigError("schedule: offset s must be positive");
  const double pi_half = std::acos(0.0);
  auto f = [&](std::size_t t) {
    const double x =
        (static_cast<double>(t) / static_cast<double>(T) + s) / (1.0 + s);
    const double c = std::cos(x * pi_half);
    return c * c;
  };
  NoiseSchedule sched;
  sched.T = T;
  sched.betas.resize(T);
  sched.alphas.resize(T);
  sched.alpha_bars.assign(T + 1, 1.0);
  const double f0 = f(0);
  double prev = 1.0;
  for (std::size_t t = 1; t <= T; ++t) {
    const double bar = f(t) / f0;
    double b = 1.0 - bar / prev;
    if (b > 0.999) b = 0.999;
    prev = bar;
    sched.betas[t - 1] = b;
    sched.alphas[t - 1] = 1.0 - b;
    sched.alpha_bars[t] = sched.alpha_bars[t - 1] * sched.alphas[t - 1];
  }
  sched.validate();
  return sched;
}

std::size_t suggest_block_count(const BlockGraph& reference_ligand) {
  if (reference_ligand.empty())
    throw DataError("suggest_block_count: reference ligand is empty");
  return reference_ligand.blocks.size();
}

}  // namespace unimomo
