#include "ipcv/report.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "ipcv/numerics.hpp"
#include "ipcv/run_spec.hpp"

namespace ipcv {

namespace {

void check_token(std::string_view s) {
  if (s.find_first_of(",\n\r\"") != std::string_view::npos)
    throw ContractViolation("report: text cell contains a reserved character: " + std::string(s));
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = line.find(sep);
    out.push_back(line.substr(0, pos));
    if (pos == std::string_view::npos) break;
    line.remove_prefix(pos + 1);
  }
  return out;
}

std::pair<std::string, std::string> split_kv(std::string_view s) {
  const auto eq = s.find('=');
  if (eq == std::string_view::npos) throw ContractViolation("report: malformed key=value line");
  return {std::string(s.substr(0, eq)), std::string(s.substr(eq + 1))};
}

}  // namespace

void Report::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw ContractViolation("report: row width != column count");
  rows.push_back(std::move(row));
}

const std::string* Report::meta_value(std::string_view key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

std::size_t Report::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw ContractViolation("report: no column '" + std::string(name) + "'");
}

std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  const auto& s = std::get<std::string>(c);
  check_token(s);
  return s;
}

Cell parse_cell(std::string_view text) {
  const char* end = text.data() + text.size();
  std::int64_t i = 0;
  if (auto [p, ec] = std::from_chars(text.data(), end, i); ec == std::errc() && p == end && !text.empty())
    return i;
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(text.data(), end, d); ec == std::errc() && p == end && !text.empty())
    return d;
  return std::string(text);
}

std::string to_csv(const Report& r) {
  std::string out = "# format=" + std::string(kReportFormat) + "\n";
  for (const auto& [k, v] : r.meta) {
    check_token(k);
    out += "# " + k + "=" + v + "\n";
  }
  for (std::size_t i = 0; i < r.columns.size(); ++i) {
    check_token(r.columns[i]);
    out += (i ? "," : "") + r.columns[i];
  }
  out += '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
    out += '\n';
  }
  for (const auto& [k, v] : r.summary) out += "# summary " + k + "=" + format_cell(v) + "\n";
  return out;
}

Report parse_csv(std::string_view text) {
  Report r;
  enum class Stage { meta, rows } stage = Stage::meta;
  bool saw_format = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);

    if (line.starts_with("# summary ")) {
      auto [k, v] = split_kv(line.substr(10));
      r.summary.emplace_back(std::move(k), parse_cell(v));
    } else if (line.starts_with("# ")) {
      if (stage != Stage::meta) throw ContractViolation("report: metadata after header");
      auto kv = split_kv(line.substr(2));
      if (kv.first == "format") {
        if (kv.second != kReportFormat) throw ContractViolation("report: unknown format " + kv.second);
        saw_format = true;
      } else {
        r.meta.push_back(std::move(kv));
      }
    } else if (stage == Stage::meta) {
      for (auto col : split(line, ',')) r.columns.emplace_back(col);
      stage = Stage::rows;
    } else {
      std::vector<Cell> row;
      for (auto cell : split(line, ',')) row.push_back(parse_cell(cell));
      r.add_row(std::move(row));
    }
  }
  if (!saw_format) throw ContractViolation("report: missing format line");
  return r;
}

std::string to_json(const Report& r) {
  using nlohmann::ordered_json;
  const auto to_j = [](const Cell& c) -> ordered_json {
    return std::visit([](const auto& v) { return ordered_json(v); }, c);
  };
  ordered_json j;
  j["format"] = kReportFormat;
  ordered_json meta = ordered_json::object();
  for (const auto& [k, v] : r.meta) meta[k] = v;
  j["meta"] = meta;
  j["columns"] = r.columns;
  ordered_json rows = ordered_json::array();
  for (const auto& row : r.rows) {
    ordered_json obj = ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[r.columns[i]] = to_j(row[i]);
    rows.push_back(std::move(obj));
  }
  j["rows"] = std::move(rows);
  ordered_json summary = ordered_json::object();
  for (const auto& [k, v] : r.summary) summary[k] = to_j(v);
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

}  // namespace ipcv
