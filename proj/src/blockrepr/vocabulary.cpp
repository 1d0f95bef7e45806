//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//
#include "unimomo/blockrepr.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "merge_state.hpp"
#include "unimomo/aa_table.hpp"
#include "unimomo/elements.hpp"
#include "unimomo/errors.hpp"

namespace unimomo::blockrepr {

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

Vocabulary Vocabulary::with_amino_acids() {
  Vocabulary v;
  for (const auto& res : amino_acids()) {
    const Block block = residue_block(res);
    FragmentEntry e;
    e.key = res.code3;
    e.frequency = 0;
    e.is_amino_acid = true;
    for (const auto& a : block.atoms) e.atoms.push_back(a.element);
    e.bonds = block.intra_bonds;
    v.add(std::move(e));
  }
  return v;
}

void Vocabulary::add(FragmentEntry entry) {
  if (entry.key.empty()) throw DataError("vocabulary: empty entry key");
  if (find(entry.key) != nullptr)
    throw DataError("vocabulary: duplicate key '" + entry.key + "'");
  if (!entry.is_amino_acid && find_residue(entry.key) != nullptr)
    throw DataError("vocabulary: fragment key collides with residue code '" +
                    entry.key + "'");
  for (const auto& b : entry.bonds) {
    if (b.p >= entry.atoms.size() || b.q >= entry.atoms.size() || b.p == b.q)
      throw DataError("vocabulary: entry '" + entry.key +
                      "' has a bond with invalid atom indices");
  }
  if (!entry.is_amino_acid) {
    // Fragment entries must be connected.
    if (entry.atoms.empty())
      throw DataError("vocabulary: entry '" + entry.key + "' has no atoms");
    std::vector<std::vector<std::size_t>> adj(entry.atoms.size());
    for (const auto& b : entry.bonds) {
      adj[b.p].push_back(b.q);
      adj[b.q].push_back(b.p);
    }
    std::vector<char> seen(entry.atoms.size(), 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto u : adj[v])
        if (!seen[u]) {
          seen[u] = 1;
          ++count;
          stack.push_back(u);
        }
    }
    if (count != entry.atoms.size())
      throw DataError("vocabulary: fragment entry '" + entry.key +
                      "' is not connected");
    ++fragment_count_;
  }
  entries_.push_back(std::move(entry));
}

const FragmentEntry* Vocabulary::find(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.key == key) return &e;
  return nullptr;
}

std::optional<std::size_t> Vocabulary::index_of(const std::string& key) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].key == key) return i;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ostringstream out;
  for (const auto& e : vocab.entries()) {
    out << e.key << '\t' << e.frequency << '\t';
    for (std::size_t i = 0; i < e.atoms.size(); ++i) {
      if (i > 0) out << ',';
      out << e.atoms[i];
    }
    out << '\t';
    if (e.bonds.empty()) {
      out << '-';
    } else {
      for (std::size_t i = 0; i < e.bonds.size(); ++i) {
        if (i > 0) out << ';';
        out << e.bonds[i].p << '-' << e.bonds[i].q << ':' << e.bonds[i].order;
      }
    }
    out << '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open vocabulary file for writing: " + path);
  f << out.str();
  if (!f) throw DataError("failed writing vocabulary file: " + path);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what,
                        std::size_t line_no) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw DataError("vocabulary file line " + std::to_string(line_no) +
                    ": bad " + what + " '" + s + "'");
  return std::stoull(s);
}

}  // namespace

Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open vocabulary file: " + path);
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  std::size_t aa_count = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 4)
      throw DataError("vocabulary file line " + std::to_string(line_no) +
                      ": expected 4 tab-separated fields, got " +
                      std::to_string(fields.size()));
    FragmentEntry e;
    e.key = fields[0];
    e.frequency = parse_u64(fields[1], "frequency", line_no);
    e.is_amino_acid = find_residue(e.key) != nullptr;
    if (e.is_amino_acid && e.frequency != 0)
      throw DataError("vocabulary file line " + std::to_string(line_no) +
                      ": amino-acid entry must have frequency 0");
    if (fields[2].empty())
      throw DataError("vocabulary file line " + std::to_string(line_no) +
                      ": empty atom list");
    for (const auto& sym : split(fields[2], ',')) {
      if (find_element(sym) == nullptr)
        throw DataError("vocabulary file line " + std::to_string(line_no) +
                        ": unknown element '" + sym + "'");
      e.atoms.push_back(sym);
    }
    if (fields[3] != "-") {
      for (const auto& spec : split(fields[3], ';')) {
        const auto dash = spec.find('-');
        const auto colon = spec.find(':');
        if (dash == std::string::npos || colon == std::string::npos ||
            colon < dash)
          throw DataError("vocabulary file line " + std::to_string(line_no) +
                          ": bad bond spec '" + spec + "'");
        IntraBond b;
        b.p = parse_u64(spec.substr(0, dash), "bond index", line_no);
        b.q = parse_u64(spec.substr(dash + 1, colon - dash - 1), "bond index",
                        line_no);
        b.order = static_cast<int>(parse_u64(spec.substr(colon + 1),
                                             "bond order", line_no));
        if (b.order < 1 || b.order > 3)
          throw DataError("vocabulary file line " + std::to_string(line_no) +
                          ": bond order out of range");
        e.bonds.push_back(b);
      }
    }
    if (e.is_amino_acid) ++aa_count;
    vocab.add(std::move(e));
  }
  if (aa_count != amino_acids().size())
    throw DataError("vocabulary file: expected all " +
                    std::to_string(amino_acids().size()) +
                    " standard amino acids, found " + std::to_string(aa_count));
  return vocab;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

Vocabulary extract_vocabulary(const std::vector<MolGraph>& corpus,
                              std::size_t target_size) {
  if (corpus.empty()) throw DataError("vocabulary extraction: empty corpus");

  // Seed single-atom fragments with total occurrence counts.
  std::map<std::string, std::uint64_t> element_counts;
  for (const auto& mol : corpus) {
    if (mol.atoms.empty())
      throw DataError("vocabulary extraction: corpus contains an empty molecule");
    for (const auto& a : mol.atoms) {
      if (find_element(a.element) == nullptr)
        throw DataError("vocabulary extraction: unknown element '" + a.element +
                        "'");
      ++element_counts[a.element];
    }
  }
  if (target_size < element_counts.size())
    throw ConfigError("vocabulary target size " + std::to_string(target_size) +
                      " is below the number of element types present (" +
                      std::to_string(element_counts.size()) + ")");

  Vocabulary vocab = Vocabulary::with_amino_acids();
  for (const auto& [elem, count] : element_counts) {
    FragmentEntry e;
    e.key = canonical_key({elem}, {});
    e.frequency = count;
    e.atoms = {elem};
    vocab.add(std::move(e));
  }

  std::vector<detail::MergeState> states;
  states.reserve(corpus.size());
  for (const auto& mol : corpus) states.emplace_back(mol);

  while (vocab.fragment_count() < target_size) {
    // Count every adjacent-pair union key across the corpus, honoring the
    // same ring-priority filter the merge loop applies.
    struct KeyInfo {
      std::uint64_t count = 0;
      std::vector<std::string> atoms;  // canonical order, first occurrence
      std::vector<IntraBond> bonds;
    };
    std::map<std::string, KeyInfo> counts;
    for (auto& st : states) {
      const auto pairs = st.adjacent_pairs();
      std::vector<std::vector<int>> ids(st.frags.size());
      for (std::size_t f = 0; f < st.frags.size(); ++f) {
        ids[f].clear();
        for (std::size_t r = 0; r < st.rings.size(); ++r)
          for (int a : st.frags[f])
            if (std::binary_search(st.rings[r].begin(), st.rings[r].end(), a)) {
              ids[f].push_back(static_cast<int>(r));
              break;
            }
      }
      std::vector<std::set<int>> ring_nbrs(st.frags.size());
      for (const auto& [i, j] : pairs) {
        std::vector<int> inter;
        std::set_intersection(ids[i].begin(), ids[i].end(), ids[j].begin(),
                              ids[j].end(), std::back_inserter(inter));
        if (!inter.empty()) {
          ring_nbrs[i].insert(j);
          ring_nbrs[j].insert(i);
        }
      }
      for (const auto& [i, j] : pairs) {
        const bool cond_i =
            !ring_nbrs[i].empty() && ring_nbrs[i].count(j) == 0;
        const bool cond_j =
            !ring_nbrs[j].empty() && ring_nbrs[j].count(i) == 0;
        if (cond_i != cond_j) continue;
        std::vector<int> atoms;
        std::merge(st.frags[i].begin(), st.frags[i].end(), st.frags[j].begin(),
                   st.frags[j].end(), std::back_inserter(atoms));
        auto [sub_elems, sub_bonds] = st.induced_subgraph(atoms);
        std::vector<int> order;
        const std::string key = canonical_key(sub_elems, sub_bonds, &order);
        if (vocab.contains(key)) continue;
        auto& info = counts[key];
        if (info.count == 0) {
          // Store the fragment relabeled into canonical order.
          std::vector<int> rank(order.size());
          for (std::size_t k = 0; k < order.size(); ++k)
            rank[order[k]] = static_cast<int>(k);
          info.atoms.resize(sub_elems.size());
          for (std::size_t k = 0; k < order.size(); ++k)
            info.atoms[k] = sub_elems[order[k]];
          for (const auto& b : sub_bonds) {
            auto p = static_cast<std::size_t>(rank[b.p]);
            auto q = static_cast<std::size_t>(rank[b.q]);
            if (p > q) std::swap(p, q);
            info.bonds.push_back({p, q, b.order});
          }
          std::sort(info.bonds.begin(), info.bonds.end(),
                    [](const IntraBond& a, const IntraBond& b) {
                      return std::tie(a.p, a.q) < std::tie(b.p, b.q);
                    });
        }
        ++info.count;
      }
    }
    if (counts.empty())
      throw DataError(
          "vocabulary extraction: target size unreachable, no adjacent "
          "fragment pairs remain after " +
          std::to_string(vocab.fragment_count()) + " fragment entries");
    // Globally most frequent key; ties break on the lexicographically
    // smallest key (std::map iterates keys in order).
    const KeyInfo* best = nullptr;
    const std::string* best_key = nullptr;
    for (const auto& [key, info] : counts) {
      if (best == nullptr || info.count > best->count) {
        best = &info;
        best_key = &key;
      }
    }
    FragmentEntry e;
    e.key = *best_key;
    e.frequency = best->count;
    e.atoms = best->atoms;
    e.bonds = best->bonds;
    vocab.add(std::move(e));
    // Re-merge the corpus incrementally with the enlarged vocabulary.
    for (auto& st : states) detail::merge_to_fixpoint(st, vocab);
  }
  return vocab;
}

}  // namespace unimomo::blockrepr
