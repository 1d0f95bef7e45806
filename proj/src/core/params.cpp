//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "unimomo/params.hpp"

#include <cmath>

namespace unimomo {

Param& ParamStore::create(const std::string& name, std::size_t rows,
                          std::size_t cols) {
  detail::require(by_name_.find(name) == by_name_.end(),
                  "ParamStore: duplicate parameter name: " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = Tensor(rows, cols);
  p->grad = Tensor(rows, cols);
  Param* raw = p.get();
  owned_.push_back(std::move(p));
  order_.push_back(raw);
  by_name_[name] = raw;
  return *raw;
}

Param& ParamStore::create_linear_weight(const std::string& name,
                                        std::size_t fan_in,
                                        std::size_t fan_out,
                                        RandomStream& rng) {
  Param& p = create(name, fan_in, fan_out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : p.value.vec())
    v = rng.uniform(-bound, bound);
  return p;
}

Param& ParamStore::get(const std::string& name) {
  auto it = by_name_.find(name);
  detail::require(it != by_name_.end(),
                  "ParamStore: unknown parameter: " + name);
  return *it->second;
}

const Param& ParamStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  detail::require(it != by_name_.end(),
                  "ParamStore: unknown parameter: " + name);
  return *it->second;
}

bool ParamStore::contains(const std::string& name) const {
  return by_name_.find(name) != by_name_.end();
}

void ParamStore::zero_grad() {
  for (Param* p : order_)
    p->grad.fill(0.0);
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Param* p : order_)
    n += p->value.size();
  return n;
}

}  // namespace unimomo
