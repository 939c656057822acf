#include "cohimpact/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cohimpact/emit.hpp"
#include "cohimpact/errors.hpp"

namespace cohimpact {

namespace {

std::string_view trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

}  // namespace

Config Config::parse(std::string_view text, std::string source) {
  Config cfg;
  cfg.source_ = std::move(source);
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto where = [&] { return cfg.source_ + ":" + std::to_string(lineno) + ": "; };
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where() + "invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(where() + "field '" + key + "': missing value");
    if (cfg.entries_.count(key))
      throw ConfigError(where() + "field '" + key + "': duplicate (first on line " +
                        std::to_string(cfg.entries_[key].line) + ")");

    Entry e;
    e.line = lineno;
    e.raw = std::string(value);
    // Split "n1, n2, n3 unit" into numbers and an optional trailing unit.
    std::string_view body = value;
    const auto last_space = body.find_last_of(" \t");
    std::string_view tail = last_space == std::string_view::npos ? std::string_view{}
                                                                  : trim(body.substr(last_space + 1));
    std::string_view head = last_space == std::string_view::npos ? body : trim(body.substr(0, last_space));
    auto try_numbers = [](std::string_view s, std::vector<double>& out) {
      out.clear();
      std::size_t p = 0;
      while (p <= s.size()) {
        std::size_t c = s.find(',', p);
        if (c == std::string_view::npos) c = s.size();
        const std::string_view item = trim(s.substr(p, c - p));
        if (item.empty()) return false;
        try {
          out.push_back(emit::parse_double(item));
        } catch (const ConfigError&) {
          return false;
        }
        p = c + 1;
      }
      return !out.empty();
    };
    if (try_numbers(body, e.numbers)) {
      e.numeric = true;
    } else if (!tail.empty() && try_numbers(head, e.numbers)) {
      try {
        e.unit = units::parse_unit(tail);
      } catch (const ConfigError& err) {
        throw ConfigError(where() + "field '" + key + "': " + err.what());
      }
      e.numeric = true;
    } else if (value.find_first_of(" \t,") != std::string_view::npos) {
      throw ConfigError(where() + "field '" + key + "': cannot parse '" + e.raw + "'");
    }
    for (double x : e.numbers)
      if (!std::isfinite(x)) throw ConfigError(where() + "field '" + key + "': non-finite value");
    cfg.entries_.emplace(key, std::move(e));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void Config::fail(const Entry& e, const std::string& key, const std::string& msg) const {
  throw ConfigError(source_ + ":" + std::to_string(e.line) + ": field '" + key + "': " + msg);
}

const Config::Entry& Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(source_ + ": missing field '" + key + "'");
  return it->second;
}

std::vector<double> Config::convert(const std::string& key, units::Dimension dim) const {
  const Entry& e = get(key);
  if (!e.numeric) fail(e, key, "expected a number, got '" + e.raw + "'");
  if (!e.unit) fail(e, key, "a unit is required");
  const units::Unit target = dim == units::Dimension::energy ? units::Unit::rad_per_ps : units::Unit::ps;
  std::vector<double> out;
  for (double x : e.numbers) {
    try {
      out.push_back(units::convert_units(x, *e.unit, target));
    } catch (const ConfigError& err) {
      fail(e, key, err.what());
    }
  }
  return out;
}

double Config::energy(const std::string& key) const {
  const auto v = convert(key, units::Dimension::energy);
  if (v.size() != 1) fail(get(key), key, "expected a single value");
  return v.front();
}

double Config::energy_or(const std::string& key, double fallback) const {
  return has(key) ? energy(key) : fallback;
}

double Config::time(const std::string& key) const {
  const auto v = convert(key, units::Dimension::time);
  if (v.size() != 1) fail(get(key), key, "expected a single value");
  return v.front();
}

double Config::time_or(const std::string& key, double fallback) const {
  return has(key) ? time(key) : fallback;
}

double Config::number(const std::string& key) const {
  const Entry& e = get(key);
  if (!e.numeric || e.numbers.size() != 1) fail(e, key, "expected a single number");
  if (e.unit) fail(e, key, "dimensionless field takes no unit");
  return e.numbers.front();
}

double Config::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

int Config::integer_or(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const double x = number(key);
  if (x != std::floor(x) || std::abs(x) > 1e9) fail(get(key), key, "expected an integer");
  return static_cast<int>(x);
}

std::string Config::word_or(const std::string& key, std::string fallback) const {
  if (!has(key)) return fallback;
  const Entry& e = get(key);
  if (e.numeric) fail(e, key, "expected a word, got a number");
  return e.raw;
}

std::vector<double> Config::numbers(const std::string& key) const {
  const Entry& e = get(key);
  if (!e.numeric) fail(e, key, "expected numbers");
  if (e.unit) fail(e, key, "dimensionless field takes no unit");
  return e.numbers;
}

std::vector<double> Config::energies(const std::string& key) const {
  return convert(key, units::Dimension::energy);
}

void Config::require_known(const std::set<std::string>& allowed) const {
  for (const auto& [key, e] : entries_)
    if (!allowed.count(key))
      throw ConfigError(source_ + ":" + std::to_string(e.line) + ": unknown field '" + key + "'");
}

}  // namespace cohimpact
