#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace jarz::cli {
namespace {

std::vector<std::string> split_key(std::string_view key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    parts.emplace_back(key.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (parts.back().empty()) throw ConfigError("malformed config key '" + std::string(key) + "'");
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

void collect(const toml::table& table, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [k, v] : table) {
    const std::string key = prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str());
    if (const auto* sub = v.as_table()) {
      collect(*sub, key, out);
    } else {
      out.push_back(key);
    }
  }
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

double as_double(const toml::node& n, std::string_view key) {
  if (const auto* f = n.as_floating_point()) return f->get();
  if (const auto* i = n.as_integer()) return static_cast<double>(i->get());
  throw ConfigError("config key '" + std::string(key) + "' must be a number");
}

}  // namespace

Config Config::from_string(std::string_view text, std::string_view source) {
  Config c;
  try {
    c.root_ = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "cannot parse " << source << ": " << e.description() << " (line "
        << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }
  return c;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path);
}

void Config::apply_override(std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  const std::string text = trim(assignment.substr(eq + 1));
  const auto parts = split_key(key);

  toml::table parsed;
  try {
    parsed = toml::parse("v = " + text);
  } catch (const toml::parse_error&) {
    parsed.insert_or_assign("v", text);
  }

  toml::table* table = &root_;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    auto* node = table->get(parts[i]);
    if (!node) {
      table->insert_or_assign(parts[i], toml::table{});
      node = table->get(parts[i]);
    }
    table = node->as_table();
    if (!table) throw ConfigError("override '" + key + "' descends into a non-table value");
  }
  table->insert_or_assign(parts.back(), *parsed.get("v"));
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  collect(root_, "", out);
  return out;
}

void Config::check_keys(const std::set<std::string>& allowed) const {
  for (const auto& k : keys()) {
    if (!allowed.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
}

const toml::node* Config::find(std::string_view key) const {
  const toml::node* node = &root_;
  for (const auto& part : split_key(key)) {
    const auto* table = node->as_table();
    if (!table) return nullptr;
    node = table->get(part);
    if (!node) return nullptr;
  }
  return node;
}

const toml::node& Config::require(std::string_view key) const {
  const auto* n = find(key);
  if (!n) throw ConfigError("missing required config key '" + std::string(key) + "'");
  return *n;
}

bool Config::has(std::string_view key) const { return find(key) != nullptr; }

double Config::get_double(std::string_view key, double fallback) const {
  const auto* n = find(key);
  return n ? as_double(*n, key) : fallback;
}

double Config::require_double(std::string_view key) const { return as_double(require(key), key); }

std::uint64_t Config::require_uint(std::string_view key) const {
  const auto* i = require(key).as_integer();
  if (!i || i->get() < 0) {
    throw ConfigError("config key '" + std::string(key) + "' must be a non-negative integer");
  }
  return static_cast<std::uint64_t>(i->get());
}

std::uint64_t Config::get_uint(std::string_view key, std::uint64_t fallback) const {
  return has(key) ? require_uint(key) : fallback;
}

bool Config::get_bool(std::string_view key, bool fallback) const {
  const auto* n = find(key);
  if (!n) return fallback;
  const auto* b = n->as_boolean();
  if (!b) throw ConfigError("config key '" + std::string(key) + "' must be true or false");
  return b->get();
}

std::string Config::require_string(std::string_view key) const {
  const auto* s = require(key).as_string();
  if (!s) throw ConfigError("config key '" + std::string(key) + "' must be a string");
  return s->get();
}

std::string Config::get_string(std::string_view key, std::string_view fallback) const {
  return has(key) ? require_string(key) : std::string(fallback);
}

bool Config::is_array(std::string_view key) const {
  const auto* n = find(key);
  return n && n->is_array();
}

std::vector<double> Config::require_doubles(std::string_view key) const {
  const auto* a = require(key).as_array();
  if (!a) throw ConfigError("config key '" + std::string(key) + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& n : *a) out.push_back(as_double(n, key));
  return out;
}

std::vector<std::string> Config::get_strings(std::string_view key,
                                             std::vector<std::string> fallback) const {
  const auto* n = find(key);
  if (!n) return fallback;
  const auto* a = n->as_array();
  if (!a) throw ConfigError("config key '" + std::string(key) + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& item : *a) {
    const auto* s = item.as_string();
    if (!s) throw ConfigError("config key '" + std::string(key) + "' must be an array of strings");
    out.push_back(s->get());
  }
  return out;
}

}  // namespace jarz::cli
