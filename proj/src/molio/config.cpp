//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <cctype>
#include <sstream>

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

}  // namespace

std::map<std::string, std::string> parse_config_text(
    const std::string& text, const std::string& context) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos)
      line = line.substr(0, hash);
    line = strip(line);
    if (line.empty())
      continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(context + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(context + ":" + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second)
      throw ConfigError(context + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
  }
  return out;
}

std::map<std::string, std::string> parse_config(
    const std::filesystem::path& path) {
  return parse_config_text(read_file(path), path.string());
}

}  // namespace unimomo::molio
