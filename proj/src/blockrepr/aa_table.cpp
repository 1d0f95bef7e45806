//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "unimomo/aa_table.hpp"

#include <map>
#include <stdexcept>

namespace unimomo {
namespace {

using Bond = std::tuple<std::string, std::string, int>;

ResidueTemplate make(const std::string& code3, char code1,
                     std::vector<std::string> sidechain_atoms,
                     std::vector<Bond> sidechain_bonds) {
  ResidueTemplate rt;
  rt.code3 = code3;
  rt.code1 = code1;
  rt.atoms = {{"N", "N"}, {"CA", "C"}, {"C", "C"}, {"O", "O"}};
  for (const std::string& name : sidechain_atoms) {
    // Heavy-atom PDB names start with their element letter (no two-letter
    // elements occur in standard residues).
    rt.atoms.emplace_back(name, name.substr(0, 1));
  }
  rt.bonds = {{"N", "CA", 1}, {"CA", "C", 1}, {"C", "O", 2}};
  rt.bonds.insert(rt.bonds.end(), sidechain_bonds.begin(),
                  sidechain_bonds.end());
  return rt;
}

std::vector<ResidueTemplate> build_table() {
  std::vector<ResidueTemplate> t;
  t.push_back(make("ALA", 'A', {"CB"}, {{"CA", "CB", 1}}));
  t.push_back(make("ARG", 'R', {"CB", "CG", "CD", "NE", "CZ", "NH1", "NH2"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "CD", 1},
                    {"CD", "NE", 1},
                    {"NE", "CZ", 1},
                    {"CZ", "NH1", 2},
                    {"CZ", "NH2", 1}}));
  t.push_back(make("ASN", 'N', {"CB", "CG", "OD1", "ND2"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "OD1", 2},
                    {"CG", "ND2", 1}}));
  t.push_back(make("ASP", 'D', {"CB", "CG", "OD1", "OD2"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "OD1", 2},
                    {"CG", "OD2", 1}}));
  t.push_back(make("CYS", 'C', {"CB", "SG"},
                   {{"CA", "CB", 1}, {"CB", "SG", 1}}));
  t.push_back(make("GLN", 'Q', {"CB", "CG", "CD", "OE1", "NE2"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "CD", 1},
                    {"CD", "OE1", 2},
                    {"CD", "NE2", 1}}));
  t.push_back(make("GLU", 'E', {"CB", "CG", "CD", "OE1", "OE2"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "CD", 1},
                    {"CD", "OE1", 2},
                    {"CD", "OE2", 1}}));
  t.push_back(make("GLY", 'G', {}, {}));
  t.push_back(make("HIS", 'H', {"CB", "CG", "ND1", "CD2", "CE1", "NE2"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "ND1", 1},
                    {"CG", "CD2", 2},
                    {"ND1", "CE1", 1},
                    {"CE1", "NE2", 2},
                    {"NE2", "CD2", 1}}));
  t.push_back(make("ILE", 'I', {"CB", "CG1", "CG2", "CD1"},
                   {{"CA", "CB", 1},
                    {"CB", "CG1", 1},
                    {"CB", "CG2", 1},
                    {"CG1", "CD1", 1}}));
  t.push_back(make("LEU", 'L', {"CB", "CG", "CD1", "CD2"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "CD1", 1},
                    {"CG", "CD2", 1}}));
  t.push_back(make("LYS", 'K', {"CB", "CG", "CD", "CE", "NZ"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "CD", 1},
                    {"CD", "CE", 1},
                    {"CE", "NZ", 1}}));
  t.push_back(make("MET", 'M', {"CB", "CG", "SD", "CE"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "SD", 1},
                    {"SD", "CE", 1}}));
  t.push_back(make("PHE", 'F', {"CB", "CG", "CD1", "CD2", "CE1", "CE2", "CZ"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "CD1", 2},
                    {"CD1", "CE1", 1},
                    {"CE1", "CZ", 2},
                    {"CZ", "CE2", 1},
                    {"CE2", "CD2", 2},
                    {"CD2", "CG", 1}}));
  t.push_back(make("PRO", 'P', {"CB", "CG", "CD"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "CD", 1},
                    {"CD", "N", 1}}));
  t.push_back(make("SER", 'S', {"CB", "OG"},
                   {{"CA", "CB", 1}, {"CB", "OG", 1}}));
  t.push_back(make("THR", 'T', {"CB", "OG1", "CG2"},
                   {{"CA", "CB", 1}, {"CB", "OG1", 1}, {"CB", "CG2", 1}}));
  t.push_back(make("TRP", 'W',
                   {"CB", "CG", "CD1", "CD2", "NE1", "CE2", "CE3", "CZ2",
                    "CZ3", "CH2"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "CD1", 2},
                    {"CD1", "NE1", 1},
                    {"NE1", "CE2", 1},
                    {"CE2", "CD2", 2},
                    {"CD2", "CG", 1},
                    {"CE2", "CZ2", 1},
                    {"CZ2", "CH2", 2},
                    {"CH2", "CZ3", 1},
                    {"CZ3", "CE3", 2},
                    {"CE3", "CD2", 1}}));
  t.push_back(make("TYR", 'Y',
                   {"CB", "CG", "CD1", "CD2", "CE1", "CE2", "CZ", "OH"},
                   {{"CA", "CB", 1},
                    {"CB", "CG", 1},
                    {"CG", "CD1", 2},
                    {"CD1", "CE1", 1},
                    {"CE1", "CZ", 2},
                    {"CZ", "CE2", 1},
                    {"CE2", "CD2", 2},
                    {"CD2", "CG", 1},
                    {"CZ", "OH", 1}}));
  t.push_back(make("VAL", 'V', {"CB", "CG1", "CG2"},
                   {{"CA", "CB", 1}, {"CB", "CG1", 1}, {"CB", "CG2", 1}}));
  return t;
}

}  // namespace

const std::vector<ResidueTemplate>& amino_acids() {
  static const std::vector<ResidueTemplate> table = build_table();
  return table;
}

const ResidueTemplate* find_residue(const std::string& code3) {
  for (const ResidueTemplate& rt : amino_acids())
    if (rt.code3 == code3)
      return &rt;
  return nullptr;
}

char one_letter(const std::string& code3) {
  const ResidueTemplate* rt = find_residue(code3);
  return rt != nullptr ? rt->code1 : 'X';
}

Block residue_block(const ResidueTemplate& rt) {
  Block b;
  b.block_type = rt.code3;
  std::map<std::string, std::size_t> index;
  for (const auto& [name, element] : rt.atoms) {
    index[name] = b.atoms.size();
    b.atoms.push_back({element, name, {0.0, 0.0, 0.0}});
  }
  for (const auto& [a1, a2, order] : rt.bonds)
    b.intra_bonds.push_back({index.at(a1), index.at(a2), order});
  return b;
}

}  // namespace unimomo
