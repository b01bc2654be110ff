#include "config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "qgeom/error.hpp"

namespace qgeom::cli {

using nlohmann::json;

namespace {

constexpr const char* kCommandNames[] = {"grid", "chern", "distance", "evolve", "check"};

[[noreturn]] void config_error(const std::string& what) { throw InputError("config: " + what); }

ModelSpec resolve_model(const json& j, const std::filesystem::path& config_dir) {
  auto from_file = [&](const std::string& file) {
    std::filesystem::path p(file);
    if (p.is_relative()) p = config_dir / p;
    return load_model_spec(p);
  };
  if (j.is_string()) {
    return from_file(j.get<std::string>());
  }
  if (!j.is_object()) config_error("'model' must be a path or an object");
  if (j.contains("file")) {
    if (!j["file"].is_string()) config_error("model.file must be a string");
    return from_file(j["file"].get<std::string>());
  }
  if (!j.contains("builtin") || !j["builtin"].is_string()) {
    config_error("model object needs 'file' or 'builtin'");
  }
  const std::string name = j["builtin"].get<std::string>();
  if (name == "spin_half") {
    return spin_half(j.contains("mu_times_B") ? number_or_expression(j["mu_times_B"], "model.mu_times_B") : 1.0);
  }
  if (name == "qi_wu_zhang") {
    return qi_wu_zhang(j.contains("mass") ? number_or_expression(j["mass"], "model.mass") : 1.0);
  }
  config_error("unknown built-in model '" + name + "' (known: spin_half, qi_wu_zhang)");
}

}  // namespace

const char* to_string(Command c) { return kCommandNames[static_cast<int>(c)]; }

Command parse_command(const std::string& name) {
  for (int i = 0; i < 5; ++i) {
    if (name == kCommandNames[i]) return static_cast<Command>(i);
  }
  throw InputError("unknown command '" + name + "'");
}

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::csv;
  if (name == "json") return Format::json;
  throw InputError("unknown output format '" + name + "' (csv or json)");
}

Closure parse_closure(const std::string& name) {
  if (name == "open") return Closure::open;
  if (name == "periodic") return Closure::periodic;
  if (name == "polar_cap") return Closure::polar_cap;
  throw InputError("unknown closure '" + name + "' (open, periodic, polar_cap)");
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double number_or_expression(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    try {
      return Expr::parse(j.get<std::string>(), {}).evaluate(std::span<const double>{});
    } catch (const std::exception& e) {
      config_error(where + ": " + e.what());
    }
  }
  config_error(where + " must be a number or a constant expression");
}

std::vector<std::pair<std::string, std::string>> expression_map(const json& j,
                                                                const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object of expressions");
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, v] : j.items()) {
    if (v.is_string()) {
      out.emplace_back(k, v.get<std::string>());
    } else if (v.is_number()) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
      out.emplace_back(k, buf);
    } else {
      config_error(where + "." + k + " must be an expression string or a number");
    }
  }
  return out;
}

RunConfig load_run_config(Command command, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();

  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    config_error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) config_error("top level must be an object");

  static const std::set<std::string> known{"model",  "level",  "threads", "degeneracy_tol",
                                           "output", "format", "grid",    "chern",
                                           "distance", "evolve", "check"};
  int blocks = 0;
  for (const auto& [k, v] : doc.items()) {
    if (!known.count(k)) config_error("unknown field '" + k + "'");
    for (const char* name : kCommandNames) {
      if (k == name) ++blocks;
    }
  }
  if (blocks != 1) config_error("exactly one command block is required, found " + std::to_string(blocks));
  if (!doc.contains(to_string(command))) {
    config_error(std::string("command '") + to_string(command) + "' has no matching block");
  }

  RunConfig cfg;
  cfg.command = command;
  cfg.config_path = path;
  cfg.config_hash = fnv1a_hex(bytes);
  cfg.block = doc[to_string(command)];
  if (!cfg.block.is_object()) config_error(std::string(to_string(command)) + " block must be an object");

  if (!doc.contains("model")) config_error("missing 'model'");
  cfg.model = resolve_model(doc["model"], path.parent_path());

  if (!doc.contains("level") || !doc["level"].is_number_integer()) {
    config_error("'level' (integer, 0 = lowest energy) is required");
  }
  cfg.level = doc["level"].get<Index>();
  if (cfg.level < 0 || cfg.level >= cfg.model->dim()) {
    config_error("level " + std::to_string(cfg.level) + " out of range for dimension " +
                 std::to_string(cfg.model->dim()));
  }
  if (doc.contains("threads")) {
    if (!doc["threads"].is_number_unsigned()) config_error("'threads' must be a non-negative integer");
    cfg.threads = doc["threads"].get<unsigned>();
  }
  if (doc.contains("degeneracy_tol")) {
    cfg.degeneracy_tol = number_or_expression(doc["degeneracy_tol"], "degeneracy_tol");
    if (!(*cfg.degeneracy_tol > 0.0)) config_error("degeneracy_tol must be positive");
  }
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) config_error("'output' must be a string");
    cfg.output = doc["output"].get<std::string>();
  }
  if (doc.contains("format")) {
    if (!doc["format"].is_string()) config_error("'format' must be a string");
    cfg.format = parse_format(doc["format"].get<std::string>());
  }
  return cfg;
}

}  // namespace qgeom::cli
