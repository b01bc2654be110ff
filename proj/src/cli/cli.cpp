#include "qgeom/cli.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "output.hpp"
#include "qgeom/qgeom.hpp"
#include "qgeom/parallel.hpp"

#ifndef QGEOM_VERSION
#define QGEOM_VERSION "0.0.0"
#endif

namespace qgeom::cli {

using nlohmann::json;

namespace {

struct Result {
  Table table;
  bool single_row = false;
  Meta meta;
  json extra = json::object();
  std::optional<Table> plaquettes;
};

[[noreturn]] void block_error(Command c, const std::string& what) {
  throw InputError(std::string("config: ") + to_string(c) + ": " + what);
}

Meta base_meta(const RunConfig& cfg) {
  return {
      {"tool", "qgeom"},
      {"version", QGEOM_VERSION},
      {"command", to_string(cfg.command)},
      {"config_hash", "fnv1a64:" + cfg.config_hash},
      {"model", cfg.spec().name()},
      {"parameters", cfg.spec().parameters()},
      {"level", cfg.level},
      {"units", "hbar = 1; angles in radians"},
      {"convention_angle", "fidelity angle theta with |<psi|chi>| = cos(theta/2)"},
      {"convention_metric",
       "Q = g - (i/2) F with g = Re Q; the spin-1/2 sphere metric diag(1, sin^2 theta) equals 4 g"},
  };
}

// ---- shared block parsing ----------------------------------------------

struct AxisSpec {
  Index parameter = 0;
  double min = 0.0;
  double max = 0.0;
  Index count = 1;
  Closure closure = Closure::open;
};

/// Reads `axes` and `fixed`; every model parameter must be in exactly one.
std::pair<std::vector<AxisSpec>, RealVector> read_axes(const RunConfig& cfg, const char* count_key,
                                                       bool with_closure) {
  const ModelSpec& model = cfg.spec();
  const json& b = cfg.block;
  if (!b.contains("axes") || !b["axes"].is_array() || b["axes"].empty()) {
    block_error(cfg.command, "'axes' must be a non-empty array");
  }
  std::vector<std::optional<AxisSpec>> axis(static_cast<std::size_t>(model.num_parameters()));
  for (const auto& a : b["axes"]) {
    if (!a.is_object() || !a.contains("parameter") || !a["parameter"].is_string() ||
        !a.contains("min") || !a.contains("max") || !a.contains(count_key)) {
      block_error(cfg.command, std::string("each axis needs parameter, min, max, ") + count_key);
    }
    AxisSpec s;
    s.parameter = model.require_parameter(a["parameter"].get<std::string>());
    s.min = number_or_expression(a["min"], "axis min");
    s.max = number_or_expression(a["max"], "axis max");
    if (!a[count_key].is_number_integer() || a[count_key].get<Index>() < 1) {
      block_error(cfg.command, std::string(count_key) + " must be a positive integer");
    }
    s.count = a[count_key].get<Index>();
    if (with_closure && a.contains("closure")) {
      if (!a["closure"].is_string()) block_error(cfg.command, "closure must be a string");
      s.closure = parse_closure(a["closure"].get<std::string>());
    }
    auto& slot = axis[static_cast<std::size_t>(s.parameter)];
    if (slot) block_error(cfg.command, "parameter listed twice in axes");
    slot = s;
  }

  RealVector fixed = RealVector::Zero(model.num_parameters());
  std::vector<bool> have_fixed(static_cast<std::size_t>(model.num_parameters()), false);
  if (b.contains("fixed")) {
    if (!b["fixed"].is_object()) block_error(cfg.command, "'fixed' must be an object");
    for (const auto& [name, v] : b["fixed"].items()) {
      const Index mu = model.require_parameter(name);
      fixed[mu] = number_or_expression(v, "fixed." + name);
      have_fixed[static_cast<std::size_t>(mu)] = true;
    }
  }

  std::vector<AxisSpec> axes;
  for (Index mu = 0; mu < model.num_parameters(); ++mu) {
    const auto i = static_cast<std::size_t>(mu);
    if (axis[i] && have_fixed[i]) {
      block_error(cfg.command, "parameter '" + model.parameters()[i] + "' is both an axis and fixed");
    }
    if (!axis[i] && !have_fixed[i]) {
      block_error(cfg.command, "parameter '" + model.parameters()[i] + "' is neither an axis nor fixed");
    }
    if (axis[i]) axes.push_back(*axis[i]);
  }
  return {axes, fixed};
}

ParameterPoint read_point(const RunConfig& cfg, const json& j, const std::string& where) {
  const ModelSpec& model = cfg.spec();
  if (!j.is_object()) block_error(cfg.command, where + " must be an object");
  RealVector v(model.num_parameters());
  std::vector<bool> seen(static_cast<std::size_t>(model.num_parameters()), false);
  for (const auto& [name, value] : j.items()) {
    const Index mu = model.require_parameter(name);
    v[mu] = number_or_expression(value, where + "." + name);
    seen[static_cast<std::size_t>(mu)] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) block_error(cfg.command, where + " is missing '" + model.parameters()[i] + "'");
  }
  return ParameterPoint(std::move(v));
}

// ---- grid --------------------------------------------------------------

Result run_grid(const RunConfig& cfg) {
  const ModelSpec& model = cfg.spec();
  const auto [axes, fixed] = read_axes(cfg, "points", false);
  const Index k = model.num_parameters();

  Index total = 1;
  std::vector<Index> stride(axes.size(), 1);
  for (std::size_t a = axes.size(); a-- > 0;) {
    stride[a] = total;
    total *= axes[a].count;
  }
  auto point_of = [&](Index idx) {
    RealVector v = fixed;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const Index i = (idx / stride[a]) % axes[a].count;
      const auto& ax = axes[a];
      v[ax.parameter] = ax.count == 1 ? ax.min
                                      : ax.min + (ax.max - ax.min) * static_cast<double>(i) /
                                                     static_cast<double>(ax.count - 1);
    }
    return ParameterPoint(std::move(v));
  };

  struct PointResult {
    ParameterPoint point;
    QgtTensor q;
    ComplexVector state;
  };
  std::vector<PointResult> results(static_cast<std::size_t>(total));
  parallel_for(total, cfg.threads, [&](Index idx) {
    PointResult& r = results[static_cast<std::size_t>(idx)];
    r.point = point_of(idx);
    const EigenSystem es = hermitian_eigensystem(hamiltonian_at(model, r.point), cfg.degeneracy_tol);
    try {
      r.q = qgt_sum_over_states(es, hamiltonian_gradient(model, r.point), cfg.level);
    } catch (const NumericalError& e) {
      throw NumericalError("grid point " + r.point.describe(model) + ": " + e.what());
    }
    r.state = es.vector(cfg.level);
  });

  for (Index idx = 0; idx < total; ++idx) {
    for (std::size_t a = 0; a < axes.size(); ++a) {
      if ((idx / stride[a]) % axes[a].count + 1 >= axes[a].count) continue;
      const auto& p = results[static_cast<std::size_t>(idx)];
      const auto& q = results[static_cast<std::size_t>(idx + stride[a])];
      const double m = std::abs(p.state.dot(q.state));
      if (m < kMinLinkOverlap) {
        throw NumericalError("level crossing or grid too coarse between grid points " +
                             p.point.describe(model) + " and " + q.point.describe(model) +
                             " (overlap " + format_double(m) + ")");
      }
    }
  }

  Result res;
  res.meta = base_meta(cfg);
  const auto& names = model.parameters();
  for (const auto& n : names) res.table.columns.push_back(n);
  for (Index mu = 0; mu < k; ++mu)
    for (Index nu = mu; nu < k; ++nu)
      res.table.columns.push_back("g_" + names[static_cast<std::size_t>(mu)] + "_" + names[static_cast<std::size_t>(nu)]);
  for (Index mu = 0; mu < k; ++mu)
    for (Index nu = mu + 1; nu < k; ++nu)
      res.table.columns.push_back("F_" + names[static_cast<std::size_t>(mu)] + "_" + names[static_cast<std::size_t>(nu)]);
  res.table.columns.push_back("min_gap");
  res.table.columns.push_back("near_degenerate");

  for (const auto& r : results) {
    std::vector<Cell> row;
    for (Index mu = 0; mu < k; ++mu) row.emplace_back(r.point[mu]);
    const RealMatrix g = r.q.metric();
    const RealMatrix f = r.q.curvature();
    for (Index mu = 0; mu < k; ++mu)
      for (Index nu = mu; nu < k; ++nu) row.emplace_back(g(mu, nu));
    for (Index mu = 0; mu < k; ++mu)
      for (Index nu = mu + 1; nu < k; ++nu) row.emplace_back(f(mu, nu));
    row.emplace_back(r.q.min_gap);
    row.emplace_back(r.q.near_degenerate);
    res.table.rows.push_back(std::move(row));
  }
  return res;
}

// ---- chern -------------------------------------------------------------

Result run_chern(const RunConfig& cfg, std::ostream& err) {
  const ModelSpec& model = cfg.spec();
  const auto [axes, fixed] = read_axes(cfg, "cells", true);
  if (axes.size() != 2) block_error(cfg.command, "exactly two axes are required");

  SurfaceGrid grid;
  grid.first = {axes[0].parameter, axes[0].min, axes[0].max, axes[0].count, axes[0].closure};
  grid.second = {axes[1].parameter, axes[1].min, axes[1].max, axes[1].count, axes[1].closure};
  grid.base = ParameterPoint(fixed);
  const FluxResult flux = berry_flux(model, cfg.level, grid, cfg.threads);

  Result res;
  res.single_row = true;
  res.meta = base_meta(cfg);
  if (flux.ambiguous) {
    const std::string w = "some plaquette flux is near +-pi; refine the grid";
    res.meta.emplace_back("warning", w);
    err << "qgeom: warning: " << w << '\n';
  }
  res.table.columns = {"chern", "total_flux", "monopole_charge", "residue", "closed", "ambiguous",
                       "cells_" + model.parameters()[static_cast<std::size_t>(grid.first.parameter)],
                       "cells_" + model.parameters()[static_cast<std::size_t>(grid.second.parameter)]};
  res.table.rows.push_back({flux.chern, flux.total, flux.monopole_charge(), flux.residue, flux.closed,
                            flux.ambiguous, static_cast<long long>(grid.first.cells),
                            static_cast<long long>(grid.second.cells)});

  Table plaq;
  const auto& n1 = model.parameters()[static_cast<std::size_t>(grid.first.parameter)];
  const auto& n2 = model.parameters()[static_cast<std::size_t>(grid.second.parameter)];
  plaq.columns = {"i", "j", n1 + "_center", n2 + "_center", "flux"};
  for (Index i = 0; i < grid.first.cells; ++i) {
    for (Index j = 0; j < grid.second.cells; ++j) {
      plaq.rows.push_back({static_cast<long long>(i), static_cast<long long>(j),
                           0.5 * (grid.first.node(i) + grid.first.node(i + 1)),
                           0.5 * (grid.second.node(j) + grid.second.node(j + 1)),
                           flux.plaquette_flux(i, j)});
    }
  }
  res.plaquettes = std::move(plaq);
  return res;
}

// ---- distance ----------------------------------------------------------

Result run_distance(const RunConfig& cfg) {
  const ModelSpec& model = cfg.spec();
  if (!cfg.block.contains("path")) block_error(cfg.command, "missing 'path'");
  Index samples = 201;
  if (cfg.block.contains("samples")) {
    if (!cfg.block["samples"].is_number_integer()) block_error(cfg.command, "samples must be an integer");
    samples = cfg.block["samples"].get<Index>();
  }
  const PathSpec path = PathSpec::parse(model, expression_map(cfg.block["path"], "distance.path"),
                                        cfg.level, samples);
  const PathLength len = path_quantum_length(model, path, cfg.threads);
  const StateProvider states = level_state_provider(model, cfg.level, cfg.degeneracy_tol);
  const double endpoint = overlap_angle(states(path.at(0.0)), states(path.at(1.0)));

  Result res;
  res.single_row = true;
  res.meta = base_meta(cfg);
  res.table.columns = {"length", "angle", "endpoint_angle", "refined_length", "refinement_change",
                       "samples"};
  res.table.rows.push_back({len.length, len.angle, endpoint, len.refined_length,
                            len.refinement_change(), static_cast<long long>(samples)});
  return res;
}

// ---- evolve ------------------------------------------------------------

Result run_evolve(const RunConfig& cfg) {
  const ModelSpec& model = cfg.spec();
  const json& b = cfg.block;
  if (!b.contains("schedule")) block_error(cfg.command, "missing 'schedule'");
  if (!b.contains("t1") || !b.contains("dt")) block_error(cfg.command, "'t1' and 'dt' are required");
  const Schedule schedule = Schedule::parse(model, expression_map(b["schedule"], "evolve.schedule"));
  const double t0 = b.contains("t0") ? number_or_expression(b["t0"], "evolve.t0") : 0.0;
  const double t1 = number_or_expression(b["t1"], "evolve.t1");
  const double dt = number_or_expression(b["dt"], "evolve.dt");
  Index stride = 1;
  if (b.contains("stride")) {
    if (!b["stride"].is_number_integer() || b["stride"].get<Index>() < 1) {
      block_error(cfg.command, "stride must be a positive integer");
    }
    stride = b["stride"].get<Index>();
  }

  ComplexVector psi0;
  const json initial = b.contains("initial") ? b["initial"] : json("eigenstate");
  if (initial.is_string() && initial.get<std::string>() == "eigenstate") {
    psi0 = level_state_provider(model, cfg.level, cfg.degeneracy_tol)(schedule.at(t0));
  } else if (initial.is_array() && static_cast<Index>(initial.size()) == model.dim()) {
    psi0.resize(model.dim());
    for (Index i = 0; i < model.dim(); ++i) {
      const json& e = initial[static_cast<std::size_t>(i)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        block_error(cfg.command, "initial amplitudes are [re, im] pairs");
      }
      psi0[i] = Complex(e[0].get<double>(), e[1].get<double>());
    }
  } else {
    block_error(cfg.command, "initial must be \"eigenstate\" or an array of dim [re, im] pairs");
  }

  const Trajectory traj = evolve(model, schedule, StateVector(psi0), t0, t1, dt);
  const AaReport aa = aa_consistency(traj);
  const AdiabaticReport ad = adiabatic_diagnostic(model, schedule, cfg.level, traj, cfg.threads);

  Result res;
  res.meta = base_meta(cfg);
  res.meta.emplace_back("steps", static_cast<long long>(traj.step_angle.size()));
  res.meta.emplace_back("dt", traj.dt);
  res.meta.emplace_back("max_norm_drift", traj.max_norm_drift);
  res.meta.emplace_back("max_relative_deviation", aa.max_relative_deviation);
  res.meta.emplace_back("max_leakage", ad.max_leakage);
  res.meta.emplace_back("non_adiabatic", ad.non_adiabatic);
  if (!traj.warnings.empty()) res.meta.emplace_back("warnings", traj.warnings);

  res.table.columns = {"t",           "energy_mean",      "energy_uncertainty", "rate_measured",
                       "rate_aa",     "relative_deviation", "accumulated_angle", "angle_from_initial",
                       "ratio",       "ratio_status",     "leakage"};
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (i % static_cast<std::size_t>(stride) != 0 && i + 1 != traj.size()) continue;
    std::vector<Cell> row{traj.times[i], traj.energy_mean[i], traj.energy_uncertainty[i]};
    if (i < aa.steps.size()) {
      row.emplace_back(aa.steps[i].rate_measured);
      row.emplace_back(aa.steps[i].rate_predicted);
      row.emplace_back(aa.steps[i].relative_deviation);
    } else {
      row.insert(row.end(), 3, std::monostate{});
    }
    row.emplace_back(aa.accumulated_angle[i]);
    row.emplace_back(overlap_angle(traj.states.front(), traj.states[i]));
    const auto& p = ad.points[i];
    if (p.status == RatioStatus::ratio) row.emplace_back(p.ratio);
    else row.emplace_back(std::monostate{});
    row.emplace_back(std::string(to_string(p.status)));
    row.emplace_back(p.leakage);
    res.table.rows.push_back(std::move(row));
  }
  return res;
}

// ---- check -------------------------------------------------------------

Result run_check(const RunConfig& cfg) {
  const ModelSpec& model = cfg.spec();
  if (!cfg.block.contains("point")) block_error(cfg.command, "missing 'point'");
  const ParameterPoint point = read_point(cfg, cfg.block["point"], "check.point");
  const double h = cfg.block.contains("h") ? number_or_expression(cfg.block["h"], "check.h") : kDefaultStep;
  if (!(h > 0.0)) block_error(cfg.command, "h must be positive");

  const QgtTensor sum = qgt_sum_over_states(model, point, cfg.level, cfg.degeneracy_tol);
  const StateProvider states = level_state_provider(model, cfg.level, cfg.degeneracy_tol);

  std::vector<double> hs{h, h / 2, h / 4};
  std::vector<double> err_proj, err_fd;
  std::vector<QgtTensor> proj, fd;
  for (double step : hs) {
    proj.push_back(qgt_projector(aligned_stencil(states, point, step)));
    fd.push_back(qgt_overlap_fd(states, point, step));
    err_proj.push_back((proj.back().tensor() - sum.tensor()).cwiseAbs().maxCoeff());
    err_fd.push_back((fd.back().metric() - sum.metric()).cwiseAbs().maxCoeff());
  }
  auto order = [](const std::vector<double>& x, const std::vector<double>& y) -> json {
    for (double v : y) {
      if (!(v > 0.0)) return nullptr;
    }
    return log_log_slope(x, y);
  };

  Result res;
  res.meta = base_meta(cfg);
  res.meta.emplace_back("point", point.describe(model));
  res.meta.emplace_back("h", hs);
  res.meta.emplace_back("projector_error", err_proj);
  res.meta.emplace_back("overlap_fd_metric_error", err_fd);
  res.meta.emplace_back("projector_order", order(hs, err_proj));
  res.meta.emplace_back("overlap_fd_metric_order", order(hs, err_fd));
  res.meta.emplace_back("min_gap", sum.min_gap);
  res.extra = {{"convergence",
                {{"h", hs},
                 {"projector_error", err_proj},
                 {"overlap_fd_metric_error", err_fd},
                 {"projector_order", order(hs, err_proj)},
                 {"overlap_fd_metric_order", order(hs, err_fd)}}}};

  res.table.columns = {"component", "mu", "nu", "sum_over_states", "projector", "overlap_fd",
                       "dev_projector", "dev_overlap_fd"};
  const auto& names = model.parameters();
  const Index k = model.num_parameters();
  const RealMatrix gs = sum.metric(), gp = proj[0].metric(), gf = fd[0].metric();
  const RealMatrix fs = sum.curvature(), fp = proj[0].curvature(), ff = fd[0].curvature();
  for (Index mu = 0; mu < k; ++mu) {
    for (Index nu = mu; nu < k; ++nu) {
      res.table.rows.push_back({std::string("g"), names[static_cast<std::size_t>(mu)],
                                names[static_cast<std::size_t>(nu)], gs(mu, nu), gp(mu, nu),
                                gf(mu, nu), std::abs(gp(mu, nu) - gs(mu, nu)),
                                std::abs(gf(mu, nu) - gs(mu, nu))});
    }
  }
  for (Index mu = 0; mu < k; ++mu) {
    for (Index nu = mu + 1; nu < k; ++nu) {
      res.table.rows.push_back({std::string("F"), names[static_cast<std::size_t>(mu)],
                                names[static_cast<std::size_t>(nu)], fs(mu, nu), fp(mu, nu),
                                ff(mu, nu), std::abs(fp(mu, nu) - fs(mu, nu)),
                                std::abs(ff(mu, nu) - fs(mu, nu))});
    }
  }
  return res;
}

Result dispatch(const RunConfig& cfg, std::ostream& err) {
  switch (cfg.command) {
    case Command::grid: return run_grid(cfg);
    case Command::chern: return run_chern(cfg, err);
    case Command::distance: return run_distance(cfg);
    case Command::evolve: return run_evolve(cfg);
    case Command::check: return run_check(cfg);
  }
  throw InputError("unhandled command");
}

std::string render(const Result& r, Format format) {
  std::ostringstream os;
  if (format == Format::json) {
    os << make_json(r.meta, r.table, r.single_row, r.extra).dump(2) << '\n';
  } else {
    write_csv(os, r.meta, r.table);
  }
  return os.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qgeom: quantum geometric tensor, Berry flux and quantum-speed diagnostics"};
  std::string command, config, output, format;
  app.add_option("command", command, "grid | chern | distance | evolve | check")
      ->required()
      ->check(CLI::IsMember({"grid", "chern", "distance", "evolve", "check"}));
  app.add_option("--config", config, "JSON run configuration")->required();
  app.add_option("--output", output, "output path (overrides the config)");
  app.add_option("--format", format, "csv or json (overrides the config)")
      ->check(CLI::IsMember({"csv", "json"}));

  std::vector<const char*> argv;
  argv.push_back("qgeom");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kValidationError;
  }

  try {
    RunConfig cfg = load_run_config(parse_command(command), config);
    if (!output.empty()) cfg.output = output;
    if (!format.empty()) cfg.format = parse_format(format);

    const Result result = dispatch(cfg, err);
    const std::string text = render(result, cfg.format);

    if (cfg.output.empty()) {
      out << text;
      return kSuccess;
    }
    StagedFiles files;
    files.write(cfg.output, text);
    if (result.plaquettes) {
      std::ostringstream os;
      write_csv(os, result.meta, *result.plaquettes);
      std::filesystem::path plaq = cfg.output;
      plaq += ".plaquettes.csv";
      files.write(plaq, os.str());
    }
    files.commit();
    return kSuccess;
  } catch (const InputError& e) {
    err << "qgeom: error: " << e.what() << '\n';
    return kValidationError;
  } catch (const NumericalError& e) {
    err << "qgeom: numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "qgeom: numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace qgeom::cli
