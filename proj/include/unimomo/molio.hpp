//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_MOLIO_HPP_
#define UNIMOMO_MOLIO_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "unimomo/blockgraph.hpp"
#include "unimomo/tensor.hpp"

namespace unimomo::molio {

// ---- Complex JSON ----
// Schema: { "binder": ENTITY|null, "id": str, "metadata": {str:str},
//           "target": ENTITY }
// ENTITY = { "blocks": [BLOCK...], "inter_bonds": [[i,p,j,q,order]...] }
// BLOCK  = { "atoms": [{"coord":[x,y,z],"element":str,"name":str}...],
//            "block_type": str|null, "intra_bonds": [[p,q,order]...],
//            "prompt": 0|1 }
// Canonical form: keys sorted, coordinates with fixed 4-decimal precision,
// no whitespace. Hydrogens are dropped at load time.

ComplexRecord load_complex(const std::filesystem::path& path);
ComplexRecord parse_complex(const std::string& json_text,
                            const std::string& context);

// Canonical serialization (idempotent: serializing a loaded record twice
// yields identical bytes).
std::string to_canonical_json(const ComplexRecord& rec);
void save_complex(const ComplexRecord& rec, const std::filesystem::path& path);

// ---- PDB ingestion (minimal: ATOM records, altloc ' '/'A') ----
struct PdbResult {
  BlockGraph graph;
  // "skipped_residues": comma-separated chain:resseq:name entries;
  // "incomplete_blocks": comma-separated chain:resseq entries.
  std::map<std::string, std::string> metadata;
};

// One block per standard residue of the requested chains; peptide bonds
// between consecutive residues (C–N distance < 2.5 A) become inter bonds.
// Unknown residues are skipped with a warning in metadata; a requested chain
// with no residues raises DataError.
PdbResult load_pdb_protein(const std::filesystem::path& path,
                           const std::vector<std::string>& chains);

// ---- Checkpoints ----
// Binary: magic "UNIMOMO1", u32 format version, u32 tensor count, then per
// tensor (u32 name length, name bytes, u32 rows, u32 cols, rows*cols f64),
// trailing FNV-1a 64-bit checksum of all preceding bytes.
void save_checkpoint(const std::map<std::string, Tensor>& tensors,
                     const std::filesystem::path& path);
std::map<std::string, Tensor> load_checkpoint(const std::filesystem::path& path);

// ---- Config files ----
// Flat "key = value" lines; '#' starts a comment; blank lines ignored.
// Duplicate keys are an error (ConfigError).
std::map<std::string, std::string> parse_config(
    const std::filesystem::path& path);
std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& context);

// Shared helpers.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace unimomo::molio

#endif  // UNIMOMO_MOLIO_HPP_
