#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "qgeom/error.hpp"

namespace qgeom::cli {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string csv_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
        else return v;
      },
      c);
}

json json_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else if constexpr (std::is_same_v<T, double>) return std::isfinite(v) ? json(v) : json(format_double(v));
        else return v;
      },
      c);
}

}  // namespace

void write_csv(std::ostream& os, const Meta& meta, const Table& table) {
  for (const auto& [key, value] : meta) {
    os << "# " << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    os << (i ? "," : "") << table.columns[i];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << (i ? "," : "") << csv_cell(row[i]);
    }
    os << '\n';
  }
}

json make_json(const Meta& meta, const Table& table, bool single_row, const json& extra) {
  json m = json::object();
  for (const auto& [key, value] : meta) m[key] = value;

  auto row_object = [&](const std::vector<Cell>& row) {
    json o = json::object();
    for (std::size_t i = 0; i < table.columns.size(); ++i) o[table.columns[i]] = json_cell(row[i]);
    return o;
  };

  json data;
  if (single_row) {
    data = table.rows.empty() ? json::object() : row_object(table.rows.front());
    for (const auto& [k, v] : extra.items()) data[k] = v;
  } else if (extra.empty()) {
    data = json::array();
    for (const auto& row : table.rows) data.push_back(row_object(row));
  } else {
    data = extra;
    data["rows"] = json::array();
    for (const auto& row : table.rows) data["rows"].push_back(row_object(row));
  }
  return {{"meta", std::move(m)}, {"data", std::move(data)}};
}

StagedFiles::~StagedFiles() {
  if (committed_) return;
  for (const auto& [temp, target] : staged_) {
    std::error_code ec;
    std::filesystem::remove(temp, ec);
  }
}

void StagedFiles::write(const std::filesystem::path& target, const std::string& contents) {
  std::filesystem::path temp = target;
  temp += ".partial";
  staged_.emplace_back(temp, target);
  std::ofstream out(temp, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write output file '" + target.string() + "'");
  out << contents;
  out.close();
  if (!out) throw InputError("failed writing output file '" + target.string() + "'");
}

void StagedFiles::commit() {
  for (const auto& [temp, target] : staged_) {
    std::filesystem::rename(temp, target);
  }
  committed_ = true;
}

}  // namespace qgeom::cli
