//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "unimomo/eqnet.hpp"
#include "unimomo/errors.hpp"

namespace unimomo {

void EqNetConfig::validate() const {
  if (hidden_size == 0 || n_layers == 0 || n_heads == 0 ||
      edge_embed_size == 0 || vector_channels == 0)
    throw ConfigError("eqnet config: all sizes must be positive");
  if (n_rbf < 2)
    throw ConfigError("eqnet config: n_rbf must be at least 2");
  if (!(cutoff > 0.0))
    throw ConfigError("eqnet config: cutoff must be positive");
  if (hidden_size % n_heads != 0)
    throw ConfigError("eqnet config: hidden_size must be divisible by n_heads");
}

std::vector<double> rbf_embed(double distance, const EqNetConfig& cfg) {
  cfg.validate();
  const double spacing =
      cfg.cutoff / static_cast<double>(cfg.n_rbf - 1);
  const double inv_two_g2 = 1.0 / (2.0 * spacing * spacing);
  std::vector<double> out(cfg.n_rbf);
  for (std::size_t k = 0; k < cfg.n_rbf; ++k) {
    const double delta = distance - spacing * static_cast<double>(k);
    out[k] = std::exp(-delta * delta * inv_two_g2);
  }
  return out;
}

EdgeList build_edges(const std::vector<Vec3>& coords,
                     const std::vector<int>& context,
                     const std::vector<BondSpec>& bonds, double cutoff,
                     std::size_t k) {
  const std::size_t n = coords.size();
  if (context.size() != n)
    throw ConfigError("build_edges: context list size must match node count");
  for (int c : context)
    if (c != 0 && c != 1)
      throw ConfigError("build_edges: context values must be 0 or 1");
  if (!(cutoff > 0.0))
    throw ConfigError("build_edges: cutoff must be positive");
  if (k == 0)
    throw ConfigError("build_edges: neighbor cap must be positive");

  std::set<std::pair<std::size_t, std::size_t>> pairs;
  std::map<std::pair<std::size_t, std::size_t>, int> bond_type;
  for (const BondSpec& b : bonds) {
    if (b.i >= n || b.j >= n)
      throw DataError("build_edges: bond endpoint out of range");
    if (b.i == b.j)
      throw DataError("build_edges: bond endpoints must differ");
    if (b.order < 1 || b.order > 3)
      throw DataError("build_edges: bond order must be 1..3");
    const auto key = std::make_pair(std::min(b.i, b.j), std::max(b.i, b.j));
    bond_type[key] = b.order;
    pairs.insert(key);
  }

  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i)
        continue;
      const double d = distance(coords[i], coords[j]);
      if (d <= cutoff)
        cand.emplace_back(d, j);
    }
    std::sort(cand.begin(), cand.end());
    const std::size_t take = std::min(k, cand.size());
    for (std::size_t t = 0; t < take; ++t) {
      const std::size_t j = cand[t].second;
      pairs.insert({std::min(i, j), std::max(i, j)});
    }
  }

  std::vector<std::array<std::size_t, 2>> directed;
  std::vector<int> dir_type;
  directed.reserve(2 * pairs.size());
  for (const auto& pr : pairs) {
    int type;
    const auto it = bond_type.find(pr);
    if (it != bond_type.end())
      type = it->second;
    else if (context[pr.first] != context[pr.second])
      type = kEdgeTypeCross;
    else
      type = context[pr.first] == 0 ? kEdgeTypeSpatial : kEdgeTypeSpatialAlt;
    directed.push_back({pr.first, pr.second});
    dir_type.push_back(type);
    directed.push_back({pr.second, pr.first});
    dir_type.push_back(type);
  }

  // Deterministic order grouped by receiving node.
  std::vector<std::size_t> perm(directed.size());
  for (std::size_t e = 0; e < perm.size(); ++e)
    perm[e] = e;
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (directed[a][1] != directed[b][1])
      return directed[a][1] < directed[b][1];
    return directed[a][0] < directed[b][0];
  });

  EdgeList out;
  out.src.reserve(perm.size());
  out.dst.reserve(perm.size());
  out.type.reserve(perm.size());
  for (std::size_t e : perm) {
    out.src.push_back(directed[e][0]);
    out.dst.push_back(directed[e][1]);
    out.type.push_back(dir_type[e]);
  }
  return out;
}

std::vector<std::size_t> rows3(const std::vector<std::size_t>& nodes) {
  std::vector<std::size_t> out;
  out.reserve(3 * nodes.size());
  for (std::size_t v : nodes) {
    out.push_back(3 * v);
    out.push_back(3 * v + 1);
    out.push_back(3 * v + 2);
  }
  return out;
}

std::vector<std::size_t> replicate3(std::size_t n) {
  std::vector<std::size_t> out;
  out.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(i);
    out.push_back(i);
    out.push_back(i);
  }
  return out;
}

}  // namespace unimomo
