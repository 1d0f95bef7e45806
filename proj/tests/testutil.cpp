//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "testutil.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unimomo::test {

std::vector<double> random_vector(std::uint64_t seed, std::size_t n, double lo,
                                  double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (double& v : out)
    v = dist(rng);
  return out;
}

double max_rel_diff(const std::vector<double>& a,
                    const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("max_rel_diff: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

double max_abs_diff(const std::vector<double>& a,
                    const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("max_abs_diff: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

std::vector<double> random_rotation(std::uint64_t seed) {
  // Random unit quaternion -> rotation matrix.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double q[4];
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& c : q) {
      c = gauss(rng);
      norm += c * c;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  const double w = q[0] / norm, x = q[1] / norm, y = q[2] / norm,
               z = q[3] / norm;
  return {
    1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
    2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
    2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y),
  };
}

double gradcheck(const BuildLossFn& build, std::vector<unimomo::Tensor> inputs,
                 double fd_eps) {
  namespace um = unimomo;
  // Analytic pass.
  std::vector<um::Tensor> analytic;
  {
    um::Tape tape;
    std::vector<um::Value> leaves;
    for (const auto& t : inputs)
      leaves.push_back(tape.leaf(t, /*needs_grad=*/true));
    um::Value loss = build(tape, leaves);
    tape.backward(loss);
    for (um::Value v : leaves)
      analytic.push_back(tape.grad(v));
  }

  auto eval = [&](const std::vector<um::Tensor>& ins) {
    um::Tape tape;
    std::vector<um::Value> leaves;
    for (const auto& t : ins)
      leaves.push_back(tape.leaf(t, /*needs_grad=*/true));
    return tape.val(build(tape, leaves)).item();
  };

  double worst = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::size_t i = 0; i < inputs[t].size(); ++i) {
      const double orig = inputs[t].vec()[i];
      inputs[t].vec()[i] = orig + fd_eps;
      const double up = eval(inputs);
      inputs[t].vec()[i] = orig - fd_eps;
      const double down = eval(inputs);
      inputs[t].vec()[i] = orig;
      const double fd = (up - down) / (2.0 * fd_eps);
      const double an = analytic[t].vec()[i];
      const double denom = std::max({1.0, std::abs(fd), std::abs(an)});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  return worst;
}

double param_gradcheck(unimomo::ParamStore& store,
                       const std::function<double(bool)>& loss, double step,
                       double floor, const std::vector<std::string>& prefixes,
                       std::size_t stride) {
  store.zero_grad();
  loss(/*backward=*/true);
  // Copy the analytic gradients; perturbed re-evaluations must not need them.
  std::vector<unimomo::Tensor> analytic;
  analytic.reserve(store.all().size());
  for (const unimomo::Param* p : store.all())
    analytic.push_back(p->grad);
  const auto selected = [&](const std::string& name) {
    if (prefixes.empty()) return true;
    for (const std::string& pre : prefixes)
      if (name.rfind(pre, 0) == 0) return true;
    return false;
  };
  if (stride == 0) stride = 1;

  double worst = 0.0;
  for (std::size_t pi = 0; pi < store.all().size(); ++pi) {
    unimomo::Param* p = store.all()[pi];
    if (!selected(p->name)) continue;
    for (std::size_t i = 0; i < p->value.size(); i += stride) {
      const double orig = p->value.vec()[i];
      p->value.vec()[i] = orig + step;
      const double up = loss(false);
      p->value.vec()[i] = orig - step;
      const double down = loss(false);
      p->value.vec()[i] = orig;
      const double fd = (up - down) / (2.0 * step);
      // Parameters never touched by backward keep an empty gradient tensor.
      const double an =
          i < analytic[pi].size() ? analytic[pi].vec()[i] : 0.0;
      const double denom = std::max({std::abs(fd), std::abs(an), floor});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  return worst;
}

TempDir::TempDir() {
  std::mt19937_64 rng(std::random_device{}());
  const auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 64; ++attempt) {
    auto candidate = base / ("unimomo-test-" + std::to_string(rng()));
    std::error_code ec;
    if (std::filesystem::create_directory(candidate, ec)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("TempDir: could not create scratch directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace unimomo::test
