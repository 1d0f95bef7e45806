//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "unimomo/aa_table.hpp"
#include "unimomo/elements.hpp"
#include "unimomo/errors.hpp"
#include "unimomo/molio.hpp"

namespace unimomo::molio {
namespace {

std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
    ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
    --e;
  return s.substr(b, e - b);
}

// Column slice with 1-based inclusive PDB conventions; tolerant of short lines.
std::string cols(const std::string& line, std::size_t from, std::size_t to) {
  if (line.size() < from)
    return "";
  return line.substr(from - 1, std::min(to, line.size()) - (from - 1));
}

// Element from columns 77-78 when present, else first letter of the atom
// name (digits skipped, e.g. "1HB" -> H).
std::string atom_element(const std::string& line, const std::string& name) {
  std::string e = strip(cols(line, 77, 78));
  if (!e.empty())
    return normalize_element_symbol(e);
  for (char c : name)
    if (std::isalpha(static_cast<unsigned char>(c)))
      return std::string(1, static_cast<char>(
                                std::toupper(static_cast<unsigned char>(c))));
  return "";
}

struct ResidueAccum {
  std::string chain;
  std::string resseq;  // residue number + insertion code, pass-through text
  std::string resname;
  std::vector<Atom> atoms;
};

}  // namespace

PdbResult load_pdb_protein(const std::filesystem::path& path,
                           const std::vector<std::string>& chains) {
  const std::string text = read_file(path);
  std::istringstream in(text);

  // Residues in file order, grouped by consecutive (chain, resseq) runs.
  std::vector<ResidueAccum> residues;
  std::string line;
  while (std::getline(in, line)) {
    if (cols(line, 1, 6) != "ATOM  ")
      continue;
    const std::string altloc = cols(line, 17, 17);
    if (altloc != " " && altloc != "A" && !altloc.empty())
      continue;
    const std::string chain = strip(cols(line, 22, 22));
    if (std::find(chains.begin(), chains.end(), chain) == chains.end())
      continue;
    const std::string name = strip(cols(line, 13, 16));
    const std::string resname = strip(cols(line, 18, 20));
    const std::string resseq = strip(cols(line, 23, 27));  // incl. icode
    Atom atom;
    atom.name = name;
    atom.element = atom_element(line, name);
    try {
      atom.coord = {std::stod(cols(line, 31, 38)), std::stod(cols(line, 39, 46)),
                    std::stod(cols(line, 47, 54))};
    } catch (const std::exception&) {
      throw DataError("format error: " + path.string() +
                      ": unparseable coordinates in ATOM record");
    }
    if (atom.element == "H")
      continue;
    if (residues.empty() || residues.back().chain != chain ||
        residues.back().resseq != resseq) {
      residues.push_back({chain, resseq, resname, {}});
    }
    residues.back().atoms.push_back(std::move(atom));
  }

  PdbResult result;
  std::string skipped, incomplete;
  // Block index and C/N atom positions per kept residue, for peptide bonds.
  struct Kept {
    std::size_t block;
    std::string chain;
    bool has_c = false, has_n = false;
    Vec3 c_pos, n_pos;
    std::size_t c_idx = 0, n_idx = 0;
  };
  std::vector<Kept> kept;

  for (const ResidueAccum& res : residues) {
    const ResidueTemplate* rt = find_residue(res.resname);
    const std::string tag = res.chain + ":" + res.resseq;
    if (rt == nullptr) {
      if (!skipped.empty())
        skipped += ",";
      skipped += tag + ":" + res.resname;
      continue;
    }
    Block b;
    b.block_type = res.resname;
    std::map<std::string, std::size_t> present;
    for (const Atom& a : res.atoms) {
      // Keep only canonical heavy atoms (drops OXT, nonstandard labels) and
      // the first occurrence of each name.
      const bool canonical =
          std::any_of(rt->atoms.begin(), rt->atoms.end(),
                      [&](const auto& ta) { return ta.first == a.name; });
      if (!canonical || present.count(a.name))
        continue;
      present[a.name] = b.atoms.size();
      b.atoms.push_back(a);
    }
    if (b.atoms.size() != rt->atoms.size()) {
      if (!incomplete.empty())
        incomplete += ",";
      incomplete += tag;
    }
    for (const auto& [a1, a2, order] : rt->bonds) {
      auto i1 = present.find(a1);
      auto i2 = present.find(a2);
      if (i1 != present.end() && i2 != present.end())
        b.intra_bonds.push_back({i1->second, i2->second, order});
    }
    Kept k;
    k.block = result.graph.blocks.size();
    k.chain = res.chain;
    if (auto it = present.find("C"); it != present.end()) {
      k.has_c = true;
      k.c_idx = it->second;
      k.c_pos = b.atoms[it->second].coord;
    }
    if (auto it = present.find("N"); it != present.end()) {
      k.has_n = true;
      k.n_idx = it->second;
      k.n_pos = b.atoms[it->second].coord;
    }
    kept.push_back(k);
    result.graph.blocks.push_back(std::move(b));
  }

  // Peptide bonds between consecutive kept residues of the same chain.
  for (std::size_t r = 1; r < kept.size(); ++r) {
    const Kept& prev = kept[r - 1];
    const Kept& cur = kept[r];
    if (prev.chain != cur.chain || !prev.has_c || !cur.has_n)
      continue;
    if (distance(prev.c_pos, cur.n_pos) < 2.5)
      result.graph.inter_bonds.push_back(
          {prev.block, prev.c_idx, cur.block, cur.n_idx, 1});
  }

  // Every requested chain must have produced at least one residue.
  for (const std::string& chain : chains) {
    const bool found = std::any_of(kept.begin(), kept.end(),
                                   [&](const Kept& k) { return k.chain == chain; });
    if (!found)
      throw DataError("chain not found in " + path.string() + ": '" + chain +
                      "'");
  }

  if (!skipped.empty())
    result.metadata["skipped_residues"] = skipped;
  if (!incomplete.empty())
    result.metadata["incomplete_blocks"] = incomplete;
  return result;
}

}  // namespace unimomo::molio
