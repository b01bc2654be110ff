#pragma once

#include <string>
#include <vector>

#include "qgeom/expr.hpp"
#include "qgeom/model.hpp"
#include "qgeom/numerics.hpp"
#include "qgeom/qgt.hpp"

namespace qgeom {

/// theta = 2 arccos|<psi|chi>| in [0, pi], i.e. |<psi|chi>| = cos(theta/2).
double fidelity_angle(const StateVector& psi, const StateVector& chi);

/// Curve lambda(s), s in [0, 1], one expression in `s` per model parameter.
struct PathSpec {
  std::vector<Expr> coords;
  Index level = 0;
  Index samples = 201;

  /// Parses {parameter -> expression in s}; every model parameter must be covered.
  static PathSpec parse(const ModelSpec& model, const std::vector<std::pair<std::string, std::string>>& coords,
                        Index level, Index samples);

  ParameterPoint at(double s) const;
  RealVector velocity(double s) const;
};

struct PathLength {
  double length = 0.0;  // integral of sqrt(g lambda' lambda') ds
  double angle = 0.0;   // 2 * length
  double refined_length = 0.0;  // same quadrature with 2N-1 samples
  double refinement_change() const { return std::abs(refined_length - length); }
};

/// Quantum length of the curve, composite Simpson over the path samples
/// with the metric from qgt_sum_over_states. Throws NumericalError naming
/// s when the level turns degenerate on the path.
PathLength path_quantum_length(const ModelSpec& model, const PathSpec& path, unsigned threads = 1);

/// | |<psi(l)|psi(l+delta)>| - (1 - g(delta, delta)/2) |, O(|delta|^3).
double small_separation_residual(const ModelSpec& model, const ParameterPoint& point,
                                 const RealVector& delta, Index level);

enum class Closure { open, periodic, polar_cap };

/// Axis of a flux grid. `cells` plaquettes span [min, max]. A periodic axis
/// identifies max with min; a polar-cap axis puts a single shared state on
/// each end row (the poles of a sphere).
struct GridAxis {
  Index parameter = 0;
  double min = 0.0;
  double max = 0.0;
  Index cells = 1;
  Closure closure = Closure::open;

  Index nodes() const { return closure == Closure::periodic ? cells : cells + 1; }
  double node(Index i) const { return min + (max - min) * static_cast<double>(i) / static_cast<double>(cells); }
};

struct SurfaceGrid {
  GridAxis first;
  GridAxis second;
  ParameterPoint base;  // values of parameters not on the grid

  /// Sphere (one polar-cap axis, one periodic) or torus (both periodic).
  bool closed() const;
  ParameterPoint point(Index i, Index j) const;
};

struct FluxResult {
  RealMatrix plaquette_flux;  // first.cells x second.cells, radians
  double total = 0.0;
  double chern = 0.0;
  double residue = 0.0;        // |chern - round(chern)|
  bool closed = false;
  bool ambiguous = false;      // some |plaquette flux| >= 0.9 pi
  double monopole_charge() const;
};

inline constexpr double kMinLinkOverlap = 0.2;

/// Node states, row-major over (first.nodes() x second.nodes()).
std::vector<ComplexVector> grid_states(const ModelSpec& model, Index level, const SurfaceGrid& grid,
                                       unsigned threads = 1,
                                       std::optional<double> degeneracy_tol = std::nullopt);

/// Link-variable flux: each plaquette's flux is the phase of the closed
/// loop of overlaps around it, so eigenvector phases drop out exactly and
/// closed surfaces give an integer Chern number.
FluxResult berry_flux_from_states(const std::vector<ComplexVector>& states, const SurfaceGrid& grid);
FluxResult berry_flux(const ModelSpec& model, Index level, const SurfaceGrid& grid,
                      unsigned threads = 1);

}  // namespace qgeom
