#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "qgeom/geometry.hpp"
#include "qgeom/model.hpp"

namespace qgeom::cli {

enum class Command { grid, chern, distance, evolve, check };
enum class Format { csv, json };

const char* to_string(Command c);
Command parse_command(const std::string& name);
Format parse_format(const std::string& name);

/// One validated run: the model, the chosen level and the single command
/// block matching the command given on the command line.
struct RunConfig {
  Command command = Command::grid;
  std::filesystem::path config_path;
  std::string config_hash;
  std::optional<ModelSpec> model;
  Index level = 0;
  unsigned threads = 0;
  std::optional<double> degeneracy_tol;
  std::filesystem::path output;  // empty: write to stdout
  Format format = Format::csv;
  nlohmann::json block;

  const ModelSpec& spec() const { return *model; }
};

RunConfig load_run_config(Command command, const std::filesystem::path& path);

/// FNV-1a 64 of the bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// A number, or a string holding a constant expression such as "2*pi".
double number_or_expression(const nlohmann::json& j, const std::string& where);

/// Reads {"name": "expr", ...} into ordered pairs.
std::vector<std::pair<std::string, std::string>> expression_map(const nlohmann::json& j,
                                                                const std::string& where);

Closure parse_closure(const std::string& name);

}  // namespace qgeom::cli
