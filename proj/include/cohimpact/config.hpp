#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cohimpact/units.hpp"

namespace cohimpact {

// Scenario files: one "key = value [unit]" per line, '#' starts a comment.
// A value is a number, a comma-separated list of numbers sharing one
// trailing unit, or a bare word.
//
//   J = 100 cm^-1
//   T = 300 K
//   tau_c = 2.65 fs
//   N = 5, 10, 50
//   engine = heom
class Config {
 public:
  struct Entry {
    int line = 0;
    std::string raw;
    std::vector<double> numbers;
    std::optional<units::Unit> unit;
    bool numeric = false;
  };

  static Config parse(std::string_view text, std::string source = "<config>");
  static Config load(const std::string& path);

  bool empty() const { return entries_.empty(); }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::string& source() const { return source_; }

  // Quantities land in internal units (rad/ps for energies and rates, ps for
  // times). Temperatures come back as k_B T in rad/ps.
  double energy(const std::string& key) const;
  double energy_or(const std::string& key, double fallback) const;
  double time(const std::string& key) const;
  double time_or(const std::string& key, double fallback) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  int integer_or(const std::string& key, int fallback) const;
  std::string word_or(const std::string& key, std::string fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> energies(const std::string& key) const;

  // Throws ConfigError naming the first unknown key and its line.
  void require_known(const std::set<std::string>& allowed) const;

 private:
  const Entry& get(const std::string& key) const;
  [[noreturn]] void fail(const Entry& e, const std::string& key, const std::string& msg) const;
  std::vector<double> convert(const std::string& key, units::Dimension dim) const;

  std::string source_;
  std::map<std::string, Entry> entries_;
};

}  // namespace cohimpact
