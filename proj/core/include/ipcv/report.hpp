#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace ipcv {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kReportFormat = "ipcv-report-v1";

using Cell = std::variant<std::int64_t, double, std::string>;

/// Tabular experiment output.
///
/// CSV layout:
///   # format=ipcv-report-v1
///   # <meta key>=<value>          (command, spec_hash, tool_version, ...)
///   col_a,col_b,...
///   <rows>
///   # summary <key>=<value>
/// Reals use 17 significant digits so parse + reserialize is byte-exact.
/// No timestamps are written; identical inputs give identical bytes.
struct Report {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, Cell>> summary;

  void add_row(std::vector<Cell> row);
  const std::string* meta_value(std::string_view key) const;
  std::size_t column_index(std::string_view name) const;
};

std::string format_cell(const Cell& c);
/// Integer if the text is one, else real if it is one, else string.
Cell parse_cell(std::string_view text);

std::string to_csv(const Report& r);
Report parse_csv(std::string_view text);
std::string to_json(const Report& r);

}  // namespace ipcv
