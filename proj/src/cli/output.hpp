#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace qgeom::cli {

/// Empty cells are written as "" in CSV and null in JSON.
using Cell = std::variant<std::monostate, bool, double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Ordered key/value pairs written as `# key: value` lines or the JSON `meta` object.
using Meta = std::vector<std::pair<std::string, nlohmann::json>>;

/// Doubles with 17 significant digits.
std::string format_double(double v);

void write_csv(std::ostream& os, const Meta& meta, const Table& table);

/// `data` is an object when `single_row` is set, otherwise an array of row objects.
/// `extra` members are merged into an object-shaped `data`.
nlohmann::json make_json(const Meta& meta, const Table& table, bool single_row,
                         const nlohmann::json& extra = nlohmann::json::object());

/// Output files staged under temporary names and renamed on commit();
/// anything not committed is removed on destruction.
class StagedFiles {
 public:
  StagedFiles() = default;
  StagedFiles(const StagedFiles&) = delete;
  StagedFiles& operator=(const StagedFiles&) = delete;
  ~StagedFiles();

  void write(const std::filesystem::path& target, const std::string& contents);
  void commit();

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;  // temp, target
  bool committed_ = false;
};

}  // namespace qgeom::cli
