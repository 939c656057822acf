#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace cohimpact::emit {

inline constexpr int kSchemaVersion = 1;

using Cell = std::variant<double, std::int64_t, bool, std::string>;

struct Table {
  std::string schema;  // e.g. "dimer-impact"
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

enum class Format { csv, json };
Format parse_format(std::string_view text);

// 17 significant digits (bit-faithful round trip); "nan", "inf", "-inf" for
// non-finite values. Locale independent.
std::string format_double(double x);
double parse_double(std::string_view text);

std::string to_csv(const Table& t);
Table from_csv(std::string_view text, std::string schema = {});

nlohmann::json to_json(const Table& t);
// Extra top-level metadata goes next to the rows.
nlohmann::json document(std::string_view schema, nlohmann::json body);

void write(const std::filesystem::path& path, const Table& t, Format f);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace cohimpact::emit
