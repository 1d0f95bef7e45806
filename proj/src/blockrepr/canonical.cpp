//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//
// Canonical fragment keys: iterative neighborhood refinement with
// individualization, followed by a DFS SMILES writer; the key is the
// lexicographically smallest string over all canonical labelings.
#include "unimomo/blockrepr.hpp"

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "unimomo/errors.hpp"

namespace unimomo::blockrepr {
namespace {

struct AdjGraph {
  std::vector<std::string> elems;
  // Per atom: (neighbor, bond order), sorted by neighbor index.
  std::vector<std::vector<std::pair<int, int>>> adj;
  int n() const { return static_cast<int>(elems.size()); }
};

AdjGraph build_adj(const std::vector<std::string>& elements,
                   const std::vector<IntraBond>& bonds) {
  AdjGraph g;
  g.elems = elements;
  g.adj.resize(elements.size());
  for (const auto& b : bonds) {
    if (b.p >= elements.size() || b.q >= elements.size() || b.p == b.q)
      throw DataError("canonical key: bond references invalid atom index");
    if (b.order < 1 || b.order > 3)
      throw DataError("canonical key: bond order must be 1, 2, or 3");
    g.adj[b.p].emplace_back(static_cast<int>(b.q), b.order);
    g.adj[b.q].emplace_back(static_cast<int>(b.p), b.order);
  }
  for (auto& nbrs : g.adj) std::sort(nbrs.begin(), nbrs.end());
  return g;
}

void require_connected(const AdjGraph& g) {
  if (g.n() == 0) throw DataError("canonical key: empty fragment");
  std::vector<char> seen(g.n(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& [u, o] : g.adj[v]) {
      (void)o;
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  if (count != g.n()) throw DataError("canonical key: fragment is not connected");
}

// Dense-ranks arbitrary sortable keys: equal keys share a color, colors are
// 0..k-1 in key order. Label-invariant because keys are label-invariant.
template <typename Key>
int dense_rank(const std::vector<Key>& keys, std::vector<int>& colors) {
  const int n = static_cast<int>(keys.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return keys[a] < keys[b]; });
  int k = 0;
  for (int pos = 0; pos < n; ++pos) {
    if (pos > 0 && keys[idx[pos - 1]] < keys[idx[pos]]) ++k;
    colors[idx[pos]] = k;
  }
  return k + 1;
}

int initial_colors(const AdjGraph& g, std::vector<int>& colors) {
  using Key = std::tuple<std::string, int, int>;  // element, degree, order sum
  std::vector<Key> keys(g.n());
  for (int v = 0; v < g.n(); ++v) {
    int order_sum = 0;
    for (const auto& [u, o] : g.adj[v]) {
      (void)u;
      order_sum += o;
    }
    keys[v] = Key(g.elems[v], static_cast<int>(g.adj[v].size()), order_sum);
  }
  colors.assign(g.n(), 0);
  return dense_rank(keys, colors);
}

// Refines colors until stable. Old color is the primary sort key so cells
// only ever split; stability is detected by an unchanged distinct count.
int refine(const AdjGraph& g, std::vector<int>& colors, int k) {
  using Key = std::pair<int, std::vector<std::pair<int, int>>>;
  for (;;) {
    std::vector<Key> keys(g.n());
    for (int v = 0; v < g.n(); ++v) {
      std::vector<std::pair<int, int>> nbr;
      nbr.reserve(g.adj[v].size());
      for (const auto& [u, o] : g.adj[v]) nbr.emplace_back(o, colors[u]);
      std::sort(nbr.begin(), nbr.end());
      keys[v] = Key(colors[v], std::move(nbr));
    }
    const int k2 = dense_rank(keys, colors);
    if (k2 == k) return k;
    k = k2;
  }
}

std::string atom_token(const std::string& elem) {
  static const std::set<std::string> kBare = {"B", "C",  "N",  "O", "F",
                                              "P", "S",  "Cl", "Br", "I",
                                              "H"};
  if (kBare.count(elem)) return elem;
  return "[" + elem + "]";
}

const char* bond_symbol(int order) {
  switch (order) {
    case 2: return "=";
    case 3: return "#";
    default: return "";
  }
}

std::string closure_digit(int num) {
  if (num < 10) return std::string(1, static_cast<char>('0' + num));
  if (num > 99) throw DataError("canonical key: more than 99 ring closures");
  return "%" + std::to_string(num);
}

// SMILES writer for one discrete labeling. `rank[v]` is the canonical
// position of atom v; the root is the rank-0 atom and neighbors are visited
// in rank order. Ring-closure digits appear on both atoms of each back edge,
// with the bond symbol on the closing (later) side.
struct SmilesWriter {
  const AdjGraph& g;
  const std::vector<int>& rank;
  std::vector<char> visited;
  std::vector<std::vector<int>> children;
  // Per atom: (closure number, bond order, is_anchor), anchor = earlier atom.
  std::vector<std::vector<std::tuple<int, int, bool>>> closures;
  std::set<std::pair<int, int>> used_edges;
  int next_closure = 1;

  SmilesWriter(const AdjGraph& graph, const std::vector<int>& ranks)
      : g(graph), rank(ranks), visited(graph.n(), 0),
        children(graph.n()), closures(graph.n()) {}

  static std::pair<int, int> edge_key(int a, int b) {
    return {std::min(a, b), std::max(a, b)};
  }

  void dfs(int v) {
    visited[v] = 1;
    auto nbrs = g.adj[v];
    std::sort(nbrs.begin(), nbrs.end(), [&](const auto& a, const auto& b) {
      return rank[a.first] < rank[b.first];
    });
    for (const auto& [u, order] : nbrs) {
      if (used_edges.count(edge_key(v, u))) continue;
      used_edges.insert(edge_key(v, u));
      if (!visited[u]) {
        children[v].push_back(u);
        dfs(u);
      } else {
        // Back edge to an ancestor: u was emitted earlier, so it anchors.
        const int num = next_closure++;
        closures[u].emplace_back(num, order, true);
        closures[v].emplace_back(num, order, false);
      }
    }
  }

  int bond_order(int v, int u) const {
    for (const auto& [w, o] : g.adj[v])
      if (w == u) return o;
    throw DataError("canonical key: internal edge lookup failed");
  }

  void emit(int v, std::string& out) {
    out += atom_token(g.elems[v]);
    auto cls = closures[v];
    std::sort(cls.begin(), cls.end());
    for (const auto& [num, order, anchor] : cls) {
      if (!anchor) out += bond_symbol(order);
      out += closure_digit(num);
    }
    const auto& ch = children[v];
    for (std::size_t i = 0; i < ch.size(); ++i) {
      std::string part = bond_symbol(bond_order(v, ch[i]));
      emit(ch[i], part);
      if (i + 1 < ch.size()) {
        out += "(";
        out += part;
        out += ")";
      } else {
        out += part;
      }
    }
  }

  std::string write() {
    int root = 0;
    for (int v = 0; v < g.n(); ++v)
      if (rank[v] == 0) root = v;
    dfs(root);
    std::string out;
    emit(root, out);
    return out;
  }
};

struct SearchState {
  std::string best;
  bool has_best = false;
  std::vector<int> best_rank;
};

void search(const AdjGraph& g, std::vector<int> colors, int k, SearchState& st) {
  k = refine(g, colors, k);
  if (k == g.n()) {
    SmilesWriter writer(g, colors);
    std::string s = writer.write();
    if (!st.has_best || s < st.best) {
      st.best = std::move(s);
      st.best_rank = colors;
      st.has_best = true;
    }
    return;
  }
  // Branch on the first (smallest-color) non-singleton cell: invariant under
  // relabeling, so the explored leaf set — and hence the minimum — is too.
  std::vector<int> counts(k, 0);
  for (int v = 0; v < g.n(); ++v) ++counts[colors[v]];
  int cell = 0;
  while (counts[cell] < 2) ++cell;
  for (int v = 0; v < g.n(); ++v) {
    if (colors[v] != cell) continue;
    std::vector<int> c2(g.n());
    for (int u = 0; u < g.n(); ++u) c2[u] = colors[u] * 2 + 1;
    c2[v] -= 1;
    std::vector<std::pair<int, int>> keys(g.n());
    for (int u = 0; u < g.n(); ++u) keys[u] = {c2[u], 0};
    std::vector<int> dense(g.n());
    const int k2 = dense_rank(keys, dense);
    search(g, dense, k2, st);
  }
}

}  // namespace

std::string canonical_key(const std::vector<std::string>& elements,
                          const std::vector<IntraBond>& bonds,
                          std::vector<int>* canonical_order) {
  AdjGraph g = build_adj(elements, bonds);
  require_connected(g);
  std::vector<int> colors;
  const int k = initial_colors(g, colors);
  SearchState st;
  search(g, std::move(colors), k, st);
  if (canonical_order != nullptr) {
    canonical_order->assign(g.n(), 0);
    for (int v = 0; v < g.n(); ++v) (*canonical_order)[st.best_rank[v]] = v;
  }
  return st.best;
}

std::string canonical_key(const MolGraph& mol, std::vector<int>* canonical_order) {
  std::vector<std::string> elements;
  elements.reserve(mol.atoms.size());
  for (const auto& a : mol.atoms) elements.push_back(a.element);
  return canonical_key(elements, mol.bonds, canonical_order);
}

}  // namespace unimomo::blockrepr
