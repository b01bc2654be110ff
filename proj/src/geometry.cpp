#include "qgeom/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "qgeom/error.hpp"
#include "qgeom/parallel.hpp"

namespace qgeom {

double fidelity_angle(const StateVector& psi, const StateVector& chi) {
  if (psi.dim() != chi.dim()) {
    throw InputError("fidelity_angle: states have different dimensions");
  }
  return overlap_angle(psi.amplitudes(), chi.amplitudes());
}

PathSpec PathSpec::parse(const ModelSpec& model,
                         const std::vector<std::pair<std::string, std::string>>& coords,
                         Index level, Index samples) {
  if (samples < 2) {
    throw InputError("path needs at least 2 samples");
  }
  PathSpec path;
  path.level = level;
  path.samples = samples;
  std::vector<std::optional<Expr>> slots(static_cast<std::size_t>(model.num_parameters()));
  for (const auto& [name, src] : coords) {
    const Index mu = model.require_parameter(name);
    slots[static_cast<std::size_t>(mu)] = Expr::parse(src, {"s"});
  }
  for (std::size_t mu = 0; mu < slots.size(); ++mu) {
    if (!slots[mu]) {
      throw InputError("path does not specify parameter '" + model.parameters()[mu] + "'");
    }
    path.coords.push_back(*slots[mu]);
  }
  return path;
}

ParameterPoint PathSpec::at(double s) const {
  RealVector v(static_cast<Index>(coords.size()));
  const double arg[] = {s};
  for (std::size_t mu = 0; mu < coords.size(); ++mu) {
    v[static_cast<Index>(mu)] = coords[mu].evaluate(std::span<const double>(arg));
  }
  return ParameterPoint(std::move(v));
}

RealVector PathSpec::velocity(double s) const {
  RealVector v(static_cast<Index>(coords.size()));
  const double arg[] = {s};
  for (std::size_t mu = 0; mu < coords.size(); ++mu) {
    v[static_cast<Index>(mu)] = coords[mu].evaluate_with_derivative(std::span<const double>(arg), 0).second;
  }
  return v;
}

namespace {

/// Composite Simpson on uniformly spaced samples; an odd number of
/// intervals closes with the 3/8 rule, a single interval is a trapezoid.
double simpson(const std::vector<double>& f, double step) {
  const auto m = static_cast<Index>(f.size()) - 1;
  if (m < 1) return 0.0;
  if (m == 1) return 0.5 * step * (f[0] + f[1]);
  const Index even_end = (m % 2 == 0) ? m : m - 3;
  double sum = 0.0;
  for (Index i = 0; i + 2 <= even_end; i += 2) {
    sum += step / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  }
  if (even_end != m) {
    const Index i = even_end;
    sum += 3.0 * step / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
  }
  return sum;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PathLength path_quantum_length(const ModelSpec& model, const PathSpec& path, unsigned threads) {
  if (static_cast<Index>(path.coords.size()) != model.num_parameters()) {
    throw InputError("path dimension does not match the model");
  }
  const Index fine = 2 * path.samples - 1;
  std::vector<double> speed(static_cast<std::size_t>(fine));
  parallel_for(fine, threads, [&](Index i) {
    const double s = static_cast<double>(i) / static_cast<double>(fine - 1);
    const RealVector v = path.velocity(s);
    if (v.isZero(0.0)) {
      speed[static_cast<std::size_t>(i)] = 0.0;
      return;
    }
    try {
      const QgtTensor q = qgt_sum_over_states(model, path.at(s), path.level);
      const double quad = v.dot(q.metric() * v);
      speed[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, quad));
    } catch (const NumericalError& e) {
      throw NumericalError("path at s=" + fmt(s) + ": " + e.what());
    }
  });

  std::vector<double> coarse;
  for (std::size_t i = 0; i < speed.size(); i += 2) coarse.push_back(speed[i]);

  PathLength out;
  out.length = simpson(coarse, 1.0 / static_cast<double>(path.samples - 1));
  out.refined_length = simpson(speed, 1.0 / static_cast<double>(fine - 1));
  out.angle = 2.0 * out.length;
  return out;
}

double small_separation_residual(const ModelSpec& model, const ParameterPoint& point,
                                 const RealVector& delta, Index level) {
  const StateProvider states = level_state_provider(model, level);
  const ComplexVector a = states(point);
  if (delta.isZero(0.0)) return 0.0;  // same ray, whatever rounding says
  const ComplexVector b = states(point.displaced(delta));
  const RealMatrix g = qgt_sum_over_states(model, point, level).metric();
  return std::abs(one_minus_overlap_modulus(a, b) - 0.5 * delta.dot(g * delta));
}

bool SurfaceGrid::closed() const {
  const bool p1 = first.closure == Closure::periodic;
  const bool p2 = second.closure == Closure::periodic;
  const bool c1 = first.closure == Closure::polar_cap;
  const bool c2 = second.closure == Closure::polar_cap;
  return (p1 && p2) || (c1 && p2) || (p1 && c2);
}

ParameterPoint SurfaceGrid::point(Index i, Index j) const {
  RealVector v = base.values();
  v[first.parameter] = first.node(i);
  v[second.parameter] = second.node(j);
  return ParameterPoint(std::move(v));
}

double FluxResult::monopole_charge() const { return std::abs(total) / (4.0 * std::numbers::pi); }

namespace {

void validate_grid(const SurfaceGrid& grid) {
  for (const GridAxis* ax : {&grid.first, &grid.second}) {
    if (ax->cells < 1 || !(ax->max > ax->min)) {
      throw InputError("grid axis needs cells >= 1 and max > min");
    }
    if (ax->parameter < 0 || ax->parameter >= grid.base.size()) {
      throw InputError("grid axis parameter index out of range");
    }
  }
  if (grid.first.parameter == grid.second.parameter) {
    throw InputError("grid axes must be two different parameters");
  }
  if (grid.first.closure == Closure::polar_cap && grid.second.closure == Closure::polar_cap) {
    throw InputError("at most one grid axis can carry polar caps");
  }
}

/// Cap rows share one state; returns the node whose state is used for (i, j).
std::pair<Index, Index> canonical_node(const SurfaceGrid& g, Index i, Index j) {
  if (g.first.closure == Closure::polar_cap && (i == 0 || i == g.first.cells)) return {i, 0};
  if (g.second.closure == Closure::polar_cap && (j == 0 || j == g.second.cells)) return {0, j};
  return {i, j};
}

}  // namespace

std::vector<ComplexVector> grid_states(const ModelSpec& model, Index level, const SurfaceGrid& grid,
                                       unsigned threads, std::optional<double> degeneracy_tol) {
  validate_grid(grid);
  const Index n1 = grid.first.nodes();
  const Index n2 = grid.second.nodes();
  const StateProvider provider = level_state_provider(model, level, degeneracy_tol);

  std::vector<ComplexVector> states(static_cast<std::size_t>(n1 * n2));
  parallel_for(n1 * n2, threads, [&](Index idx) {
    const Index i = idx / n2;
    const Index j = idx % n2;
    if (canonical_node(grid, i, j) != std::pair{i, j}) return;
    try {
      states[static_cast<std::size_t>(idx)] = provider(grid.point(i, j));
    } catch (const NumericalError& e) {
      throw NumericalError("grid node (" + std::to_string(i) + "," + std::to_string(j) + "): " +
                           e.what());
    }
  });

  for (Index idx = 0; idx < n1 * n2; ++idx) {
    const Index i = idx / n2;
    const Index j = idx % n2;
    const auto [ci, cj] = canonical_node(grid, i, j);
    if (ci != i || cj != j) {
      states[static_cast<std::size_t>(idx)] = states[static_cast<std::size_t>(ci * n2 + cj)];
    }
  }

  // A cap row must really be a single ray.
  auto check_cap = [&](Index i, Index j) {
    const auto [ci, cj] = canonical_node(grid, i, j);
    const ComplexVector probe = provider(grid.point(i, j));
    const double m = std::abs(states[static_cast<std::size_t>(ci * n2 + cj)].dot(probe));
    if (m < 1.0 - 1e-8) {
      throw InputError("polar-cap row at " + grid.point(i, j).describe(model) +
                       " is not a single state; the model depends on the azimuthal parameter there");
    }
  };
  if (grid.first.closure == Closure::polar_cap) {
    check_cap(0, n2 / 2);
    check_cap(grid.first.cells, n2 / 2);
  }
  if (grid.second.closure == Closure::polar_cap) {
    check_cap(n1 / 2, 0);
    check_cap(n1 / 2, grid.second.cells);
  }
  return states;
}

FluxResult berry_flux_from_states(const std::vector<ComplexVector>& states, const SurfaceGrid& grid) {
  validate_grid(grid);
  const Index n1 = grid.first.nodes();
  const Index n2 = grid.second.nodes();
  if (static_cast<Index>(states.size()) != n1 * n2) {
    throw InputError("berry_flux: expected " + std::to_string(n1 * n2) + " node states");
  }
  auto node = [&](Index i, Index j) -> const ComplexVector& {
    return states[static_cast<std::size_t>((i % n1) * n2 + (j % n2))];
  };
  auto link = [&](Index i0, Index j0, Index i1, Index j1) {
    const double m = std::abs(node(i0, j0).dot(node(i1, j1)));
    if (m < kMinLinkOverlap) {
      throw NumericalError("grid too coarse or level crossing: overlap " + fmt(m) +
                           " between nodes (" + std::to_string(i0) + "," + std::to_string(j0) +
                           ") and (" + std::to_string(i1 % n1) + "," + std::to_string(j1 % n2) +
                           ")");
    }
  };

  FluxResult out;
  out.plaquette_flux.resize(grid.first.cells, grid.second.cells);
  for (Index i = 0; i < grid.first.cells; ++i) {
    for (Index j = 0; j < grid.second.cells; ++j) {
      link(i, j, i + 1, j);
      link(i + 1, j, i + 1, j + 1);
      link(i + 1, j + 1, i, j + 1);
      link(i, j + 1, i, j);
      const double phase = plaquette_phase(node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1));
      out.plaquette_flux(i, j) = phase;
      out.total += phase;
      out.ambiguous = out.ambiguous || std::abs(phase) >= 0.9 * std::numbers::pi;
    }
  }
  out.chern = out.total / (2.0 * std::numbers::pi);
  out.residue = std::abs(out.chern - std::round(out.chern));
  out.closed = grid.closed();
  return out;
}

FluxResult berry_flux(const ModelSpec& model, Index level, const SurfaceGrid& grid, unsigned threads) {
  if (grid.base.size() != model.num_parameters()) {
    throw InputError("grid base point does not match the model parameters");
  }
  return berry_flux_from_states(grid_states(model, level, grid, threads), grid);
}

}  // namespace qgeom
