//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//
// Smallest set of smallest rings via a minimum cycle basis: enumerate
// shortest-path candidate cycles (Horton's construction), then greedily keep
// cycles that are linearly independent over GF(2) on edge sets.
#include "unimomo/blockrepr.hpp"

#include <algorithm>
#include <cstdint>
#include <queue>
#include <set>
#include <vector>

#include "unimomo/errors.hpp"

namespace unimomo::blockrepr {
namespace {

using Bits = std::vector<std::uint64_t>;

Bits make_bits(std::size_t n_edges) { return Bits((n_edges + 63) / 64, 0); }

void set_bit(Bits& b, std::size_t i) { b[i / 64] |= std::uint64_t{1} << (i % 64); }

bool any_bit(const Bits& b) {
  for (auto w : b)
    if (w != 0) return true;
  return false;
}

void xor_into(Bits& a, const Bits& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] ^= b[i];
}

int lowest_set(const Bits& b) {
  for (std::size_t w = 0; w < b.size(); ++w)
    if (b[w] != 0)
      return static_cast<int>(w * 64 + static_cast<std::size_t>(__builtin_ctzll(b[w])));
  return -1;
}

struct Candidate {
  int length;
  Bits edges;
  std::vector<int> atoms;  // sorted
};

}  // namespace

std::vector<std::vector<int>> sssr(std::size_t n_atoms,
                                   const std::vector<IntraBond>& bonds) {
  const int n = static_cast<int>(n_atoms);
  // Deduplicate edges (ignore orders) and build adjacency with edge ids.
  std::set<std::pair<int, int>> seen;
  std::vector<std::pair<int, int>> edges;
  for (const auto& b : bonds) {
    if (b.p >= n_atoms || b.q >= n_atoms || b.p == b.q)
      throw DataError("ring perception: bond references invalid atom index");
    const int lo = std::min(static_cast<int>(b.p), static_cast<int>(b.q));
    const int hi = std::max(static_cast<int>(b.p), static_cast<int>(b.q));
    if (seen.insert({lo, hi}).second) edges.push_back({lo, hi});
  }
  const std::size_t m = edges.size();
  std::vector<std::vector<std::pair<int, int>>> adj(n_atoms);  // (nbr, edge id)
  for (std::size_t e = 0; e < m; ++e) {
    adj[edges[e].first].emplace_back(edges[e].second, static_cast<int>(e));
    adj[edges[e].second].emplace_back(edges[e].first, static_cast<int>(e));
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  // Cycle space dimension = E - V + number of connected components.
  int components = 0;
  {
    std::vector<char> vis(n_atoms, 0);
    for (int s = 0; s < n; ++s) {
      if (vis[s]) continue;
      ++components;
      std::vector<int> stack{s};
      vis[s] = 1;
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (const auto& [u, e] : adj[v]) {
          (void)e;
          if (!vis[u]) {
            vis[u] = 1;
            stack.push_back(u);
          }
        }
      }
    }
  }
  const int dim = static_cast<int>(m) - n + components;
  if (dim <= 0) return {};

  // BFS trees from every vertex (deterministic neighbor order).
  std::vector<std::vector<int>> dist(n_atoms), parent(n_atoms), parent_edge(n_atoms);
  for (int s = 0; s < n; ++s) {
    dist[s].assign(n_atoms, -1);
    parent[s].assign(n_atoms, -1);
    parent_edge[s].assign(n_atoms, -1);
    std::queue<int> q;
    q.push(s);
    dist[s][s] = 0;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (const auto& [u, e] : adj[v]) {
        if (dist[s][u] == -1) {
          dist[s][u] = dist[s][v] + 1;
          parent[s][u] = v;
          parent_edge[s][u] = e;
          q.push(u);
        }
      }
    }
  }

  // Candidate cycles C(v, xy) = SP(v,x) + (x,y) + SP(y,v) where the two
  // paths share only v; Horton's set contains a minimum cycle basis.
  std::vector<Candidate> cands;
  std::set<Bits> dedup;
  for (int v = 0; v < n; ++v) {
    for (std::size_t e = 0; e < m; ++e) {
      const int x = edges[e].first, y = edges[e].second;
      if (dist[v][x] < 0 || dist[v][y] < 0) continue;
      // Walk both root paths, collecting atoms and edges.
      Bits bits = make_bits(m);
      std::vector<int> atoms;
      bool ok = true;
      std::vector<char> on_path(n_atoms, 0);
      for (int end : {x, y}) {
        int cur = end;
        while (cur != v) {
          if (on_path[cur]) { ok = false; break; }
          on_path[cur] = 1;
          atoms.push_back(cur);
          set_bit(bits, static_cast<std::size_t>(parent_edge[v][cur]));
          cur = parent[v][cur];
        }
        if (!ok) break;
      }
      if (!ok) continue;
      atoms.push_back(v);
      set_bit(bits, e);
      const int len = dist[v][x] + dist[v][y] + 1;
      if (static_cast<int>(atoms.size()) != len) continue;  // not simple
      int n_bits = 0;
      for (auto w : bits) n_bits += __builtin_popcountll(w);
      if (n_bits != len) continue;  // a root path reused edge (x,y)
      if (dedup.insert(bits).second) {
        std::sort(atoms.begin(), atoms.end());
        cands.push_back({len, std::move(bits), std::move(atoms)});
      }
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.length != b.length) return a.length < b.length;
    return a.edges < b.edges;
  });

  // Greedy GF(2) independence by Gaussian elimination on edge sets.
  std::vector<Bits> basis;  // row-reduced
  std::vector<int> pivot;
  std::vector<std::vector<int>> rings;
  for (const auto& c : cands) {
    if (static_cast<int>(rings.size()) == dim) break;
    Bits reduced = c.edges;
    for (std::size_t r = 0; r < basis.size(); ++r) {
      const int p = pivot[r];
      if (reduced[static_cast<std::size_t>(p) / 64] >> (p % 64) & 1)
        xor_into(reduced, basis[r]);
    }
    if (!any_bit(reduced)) continue;
    pivot.push_back(lowest_set(reduced));
    basis.push_back(std::move(reduced));
    rings.push_back(c.atoms);
  }
  return rings;
}

std::vector<std::vector<int>> sssr(const MolGraph& mol) {
  return sssr(mol.atoms.size(), mol.bonds);
}

}  // namespace unimomo::blockrepr
