#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "qgeom/model.hpp"
#include "qgeom/numerics.hpp"

namespace qgeom {

/// Quantum geometric tensor Q_{mu nu} at one parameter point.
///
/// Q is Hermitian as a k x k form. Its real part is the quantum metric g,
/// its imaginary part sigma, and F = -2 sigma is the Berry curvature, so
/// that Q = g - (i/2) F holds by construction.
///
/// Note on normalization: for spin-1/2 the unit-sphere metric
/// diag(1, sin^2 theta) equals 4 g, i.e. it measures the Bloch angle
/// (d theta_Bloch)^2 = 4 ds^2, not ds^2 itself.
class QgtTensor {
 public:
  QgtTensor() = default;
  explicit QgtTensor(ComplexMatrix q) : q_(std::move(q)) {}

  const ComplexMatrix& tensor() const noexcept { return q_; }
  Index rank() const noexcept { return q_.rows(); }
  Complex operator()(Index mu, Index nu) const { return q_(mu, nu); }

  RealMatrix metric() const { return q_.real(); }
  RealMatrix sigma() const { return q_.imag(); }
  RealMatrix curvature() const { return -2.0 * q_.imag(); }

  /// Gap between the chosen level and the rest of the spectrum, when known.
  double min_gap = std::numeric_limits<double>::infinity();
  /// Set when the gap is below 1e-6 of the spectral range; the (E0 - En)^-2
  /// factors then amplify rounding noise.
  bool near_degenerate = false;

 private:
  ComplexMatrix q_;
};

/// Degenerate-level generalization: one d x d block per (mu, nu).
class NonAbelianQgt {
 public:
  NonAbelianQgt(Index rank, Index degeneracy);

  Index rank() const noexcept { return rank_; }
  Index degeneracy() const noexcept { return degeneracy_; }
  ComplexMatrix& block(Index mu, Index nu) { return blocks_[static_cast<std::size_t>(mu * rank_ + nu)]; }
  const ComplexMatrix& block(Index mu, Index nu) const {
    return blocks_[static_cast<std::size_t>(mu * rank_ + nu)];
  }

 private:
  Index rank_;
  Index degeneracy_;
  std::vector<ComplexMatrix> blocks_;
};

/// beta_mu = i <psi|d_mu psi>. Gauge dependent; diagnostics only.
struct BerryConnection {
  RealVector beta;
  static constexpr bool gauge_dependent = true;
};

inline constexpr double kNearDegeneracyRelative = 1e-6;
inline constexpr double kDefaultStep = 1e-4;

// --- sum over states (reference method) ---------------------------------

/// Q_{mu nu} = sum_{n != level} <l|dH_mu|n><n|dH_nu|l> / (E_l - E_n)^2.
/// Only Hamiltonian matrix elements enter, so eigenvector phases cancel.
/// Throws NumericalError if `level` is degenerate.
QgtTensor qgt_sum_over_states(const EigenSystem& states, std::span<const HermitianMatrix> dH,
                              Index level);
QgtTensor qgt_sum_over_states(const ModelSpec& model, const ParameterPoint& point, Index level,
                              std::optional<double> degeneracy_tol = std::nullopt);

/// Block [Q_{mu nu}]_{ij} over the members i, j of a maximal degenerate
/// cluster; the sum runs over every level outside that cluster.
NonAbelianQgt qgt_nonabelian(const EigenSystem& states, std::span<const HermitianMatrix> dH,
                             std::span<const Index> group);
NonAbelianQgt qgt_nonabelian(const ModelSpec& model, const ParameterPoint& point,
                             std::span<const Index> group,
                             std::optional<double> degeneracy_tol = std::nullopt);

// --- finite-difference methods -------------------------------------------

/// Maps a parameter point to a representative state of one level.
using StateProvider = std::function<ComplexVector(const ParameterPoint&)>;

/// Eigenvector of `level` at each point; throws NumericalError when the
/// level is degenerate there.
StateProvider level_state_provider(const ModelSpec& model, Index level,
                                   std::optional<double> degeneracy_tol = std::nullopt);

/// Center state plus the states at lambda +- h e_mu for every mu.
struct DerivativeStencil {
  double h = kDefaultStep;
  ComplexVector center;
  std::vector<ComplexVector> forward;
  std::vector<ComplexVector> backward;

  Index rank() const noexcept { return static_cast<Index>(forward.size()); }
};

/// Stencil whose neighbors are rephased so <center|neighbor> is real and
/// positive. Throws NumericalError if any |<center|neighbor>| < 0.5.
DerivativeStencil aligned_stencil(const StateProvider& states, const ParameterPoint& point,
                                  double h);

/// Central differences (forward - backward) / 2h, in the stencil's gauge.
std::vector<ComplexVector> derivative_states(const DerivativeStencil& stencil);

/// Q_{mu nu} = <d_mu psi| (1 - |psi><psi|) |d_nu psi>.
QgtTensor qgt_projector(const DerivativeStencil& stencil);
QgtTensor qgt_projector(const ModelSpec& model, const ParameterPoint& point, Index level,
                        double h = kDefaultStep);

/// Berry connection in the gauge of the stencil as given.
BerryConnection berry_connection(const DerivativeStencil& stencil);

/// Metric from overlap moduli and curvature from the phase of the Wilson
/// loop around the h x h cell centered on the point. Every input is either
/// an overlap modulus or a closed-loop phase.
QgtTensor qgt_overlap_fd(const StateProvider& states, const ParameterPoint& point, double h);
QgtTensor qgt_overlap_fd(const ModelSpec& model, const ParameterPoint& point, Index level,
                         double h = kDefaultStep);

/// Phase of <a|b><b|c><c|d><d|a> taken with the orientation that makes it
/// +F_{mu nu} * area when a -> b steps along mu and b -> c along nu.
double plaquette_phase(const ComplexVector& a, const ComplexVector& b, const ComplexVector& c,
                       const ComplexVector& d);

}  // namespace qgeom
