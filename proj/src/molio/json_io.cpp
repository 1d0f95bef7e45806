//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "unimomo/elements.hpp"
#include "unimomo/errors.hpp"
#include "unimomo/molio.hpp"

namespace unimomo::molio {
namespace {

using nlohmann::json;

[[noreturn]] void format_error(const std::string& context,
                               const std::string& what) {
  throw DataError("format error: " + context + ": " + what);
}

[[noreturn]] void integrity_error(const std::string& context,
                                  const std::string& what) {
  throw DataError("integrity error: " + context + ": " + what);
}

// ---- canonical writer ----
// Handwritten so the byte layout is under our control: keys in sorted order,
// no whitespace, coordinates as fixed 4-decimal numbers.

void append_escaped(std::string& out, const std::string& s) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

void append_coord(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  out += buf;
}

void append_entity(std::string& out, const BlockGraph& g) {
  out += "{\"blocks\":[";
  for (std::size_t i = 0; i < g.blocks.size(); ++i) {
    const Block& b = g.blocks[i];
    if (i > 0)
      out.push_back(',');
    out += "{\"atoms\":[";
    for (std::size_t a = 0; a < b.atoms.size(); ++a) {
      const Atom& atom = b.atoms[a];
      if (a > 0)
        out.push_back(',');
      out += "{\"coord\":[";
      append_coord(out, atom.coord[0]);
      out.push_back(',');
      append_coord(out, atom.coord[1]);
      out.push_back(',');
      append_coord(out, atom.coord[2]);
      out += "],\"element\":";
      append_escaped(out, atom.element);
      out += ",\"name\":";
      append_escaped(out, atom.name);
      out.push_back('}');
    }
    out += "],\"block_type\":";
    if (b.block_type.empty())
      out += "null";
    else
      append_escaped(out, b.block_type);
    out += ",\"intra_bonds\":[";
    for (std::size_t k = 0; k < b.intra_bonds.size(); ++k) {
      const IntraBond& bd = b.intra_bonds[k];
      if (k > 0)
        out.push_back(',');
      out += '[' + std::to_string(bd.p) + ',' + std::to_string(bd.q) + ',' +
             std::to_string(bd.order) + ']';
    }
    out += "],\"prompt\":" + std::to_string(b.prompt) + "}";
  }
  out += "],\"inter_bonds\":[";
  for (std::size_t k = 0; k < g.inter_bonds.size(); ++k) {
    const InterBond& bd = g.inter_bonds[k];
    if (k > 0)
      out.push_back(',');
    out += '[' + std::to_string(bd.i) + ',' + std::to_string(bd.p) + ',' +
           std::to_string(bd.j) + ',' + std::to_string(bd.q) + ',' +
           std::to_string(bd.order) + ']';
  }
  out += "]}";
}

// ---- parsing ----

BlockGraph parse_entity(const json& j, const std::string& context) {
  if (!j.is_object())
    format_error(context, "entity must be an object");
  if (!j.contains("blocks") || !j["blocks"].is_array())
    format_error(context, "missing 'blocks' array");
  BlockGraph g;
  // Per-block old->new atom index maps (hydrogens dropped), for inter bonds.
  std::vector<std::vector<std::size_t>> remaps;
  for (std::size_t i = 0; i < j["blocks"].size(); ++i) {
    const json& jb = j["blocks"][i];
    const std::string where = context + ".blocks[" + std::to_string(i) + "]";
    if (!jb.is_object())
      format_error(where, "block must be an object");
    Block b;
    if (jb.contains("block_type") && !jb["block_type"].is_null()) {
      if (!jb["block_type"].is_string())
        format_error(where, "'block_type' must be a string or null");
      b.block_type = jb["block_type"].get<std::string>();
    }
    if (jb.contains("prompt")) {
      if (!jb["prompt"].is_number_integer())
        format_error(where, "'prompt' must be 0 or 1");
      b.prompt = jb["prompt"].get<int>();
      if (b.prompt != 0 && b.prompt != 1)
        format_error(where, "'prompt' must be 0 or 1");
    }
    if (!jb.contains("atoms") || !jb["atoms"].is_array())
      format_error(where, "missing 'atoms' array");
    // Hydrogens are dropped here; old_index -> new_index, or npos.
    std::vector<std::size_t> remap(jb["atoms"].size(), std::string::npos);
    for (std::size_t a = 0; a < jb["atoms"].size(); ++a) {
      const json& ja = jb["atoms"][a];
      const std::string aw = where + ".atoms[" + std::to_string(a) + "]";
      if (!ja.is_object() || !ja.contains("element") ||
          !ja["element"].is_string() || !ja.contains("coord") ||
          !ja["coord"].is_array() || ja["coord"].size() != 3)
        format_error(aw, "atom needs 'element' and a 3-number 'coord'");
      Atom atom;
      atom.element = ja["element"].get<std::string>();
      if (ja.contains("name")) {
        if (!ja["name"].is_string())
          format_error(aw, "'name' must be a string");
        atom.name = ja["name"].get<std::string>();
      }
      for (int d = 0; d < 3; ++d) {
        if (!ja["coord"][d].is_number())
          format_error(aw, "coordinate must be a number");
        atom.coord[d] = ja["coord"][d].get<double>();
      }
      if (atom.element == "H")
        continue;
      if (find_element(atom.element) == nullptr)
        format_error(aw, "unknown element '" + atom.element + "'");
      remap[a] = b.atoms.size();
      b.atoms.push_back(std::move(atom));
    }
    if (jb.contains("intra_bonds")) {
      if (!jb["intra_bonds"].is_array())
        format_error(where, "'intra_bonds' must be an array");
      for (const json& bd : jb["intra_bonds"]) {
        if (!bd.is_array() || bd.size() != 3)
          format_error(where, "intra bond must be [p,q,order]");
        const auto p = bd[0].get<std::size_t>();
        const auto q = bd[1].get<std::size_t>();
        const int order = bd[2].get<int>();
        if (p >= remap.size() || q >= remap.size())
          integrity_error(where, "intra-bond atom index out of range");
        if (remap[p] == std::string::npos || remap[q] == std::string::npos)
          continue;  // bond to a dropped hydrogen
        b.intra_bonds.push_back({remap[p], remap[q], order});
      }
    }
    g.blocks.push_back(std::move(b));
    remaps.push_back(std::move(remap));
  }
  if (j.contains("inter_bonds")) {
    if (!j["inter_bonds"].is_array())
      format_error(context, "'inter_bonds' must be an array");
    for (const json& bd : j["inter_bonds"]) {
      if (!bd.is_array() || bd.size() != 5)
        format_error(context, "inter bond must be [i,p,j,q,order]");
      InterBond ib{bd[0].get<std::size_t>(), bd[1].get<std::size_t>(),
                   bd[2].get<std::size_t>(), bd[3].get<std::size_t>(),
                   bd[4].get<int>()};
      if (ib.i >= remaps.size() || ib.j >= remaps.size())
        integrity_error(context, "inter-bond block index out of range");
      if (ib.p >= remaps[ib.i].size() || ib.q >= remaps[ib.j].size())
        integrity_error(context, "inter-bond atom index out of range");
      ib.p = remaps[ib.i][ib.p];
      ib.q = remaps[ib.j][ib.q];
      if (ib.p == std::string::npos || ib.q == std::string::npos)
        continue;  // bond to a dropped hydrogen
      g.inter_bonds.push_back(ib);
    }
  }
  return g;
}

}  // namespace

ComplexRecord parse_complex(const std::string& json_text,
                            const std::string& context) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    format_error(context, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object())
    format_error(context, "top level must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "binder" && key != "target" && key != "metadata")
      format_error(context, "unknown top-level key '" + key + "'");
  }
  if (!j.contains("id") || !j["id"].is_string())
    format_error(context, "missing string 'id'");
  if (!j.contains("target"))
    format_error(context, "missing 'target'");

  ComplexRecord rec;
  rec.id = j["id"].get<std::string>();
  rec.target = parse_entity(j["target"], context + ": target");
  if (rec.target.empty())
    format_error(context, "target block list must be non-empty");
  if (j.contains("binder") && !j["binder"].is_null()) {
    rec.binder = parse_entity(j["binder"], context + ": binder");
    if (rec.binder->empty())
      format_error(context, "binder present but its block list is empty");
  }
  if (j.contains("metadata")) {
    if (!j["metadata"].is_object())
      format_error(context, "'metadata' must be an object");
    for (const auto& [key, value] : j["metadata"].items()) {
      if (!value.is_string())
        format_error(context, "metadata values must be strings");
      rec.metadata[key] = value.get<std::string>();
    }
  }

  validate(rec.target, context + ": target");
  if (rec.binder)
    validate(*rec.binder, context + ": binder");
  return rec;
}

ComplexRecord load_complex(const std::filesystem::path& path) {
  return parse_complex(read_file(path), path.string());
}

std::string to_canonical_json(const ComplexRecord& rec) {
  std::string out = "{\"binder\":";
  if (rec.binder)
    append_entity(out, *rec.binder);
  else
    out += "null";
  out += ",\"id\":";
  append_escaped(out, rec.id);
  out += ",\"metadata\":{";
  bool first = true;
  for (const auto& [key, value] : rec.metadata) {  // std::map: sorted keys
    if (!first)
      out.push_back(',');
    first = false;
    append_escaped(out, key);
    out.push_back(':');
    append_escaped(out, value);
  }
  out += "},\"target\":";
  append_entity(out, rec.target);
  out.push_back('}');
  return out;
}

void save_complex(const ComplexRecord& rec,
                  const std::filesystem::path& path) {
  write_file(path, to_canonical_json(rec) + "\n");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path,
                const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw DataError("cannot write file: " + path.string());
  out << content;
  if (!out)
    throw DataError("write failed: " + path.string());
}

}  // namespace unimomo::molio
