#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qgeom/expr.hpp"
#include "qgeom/model.hpp"
#include "qgeom/numerics.hpp"

namespace qgeom {

/// lambda(t): one expression in `t` per model parameter (hbar = 1, so t is
/// in inverse energy units).
struct Schedule {
  std::vector<Expr> coords;

  static Schedule parse(const ModelSpec& model,
                        const std::vector<std::pair<std::string, std::string>>& coords);

  ParameterPoint at(double t) const;
  /// d lambda / dt, exact via dual numbers.
  RealVector rate(double t) const;
};

struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<ComplexVector> states;        // normalized copies
  std::vector<double> energy_mean;          // <H>(t)
  std::vector<double> energy_uncertainty;   // Delta E(t)
  std::vector<double> step_angle;           // Fubini-Study angle between consecutive states
  double max_norm_drift = 0.0;              // max | |psi_raw| - 1 |
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return times.size(); }
};

inline constexpr double kMaxStepTimesRadius = 0.1;
inline constexpr double kMaxNormDrift = 1e-6;

/// Fixed-step classic RK4 for d psi/dt = -i H(t) psi. The raw state is never
/// renormalized during propagation; recorded states are normalized copies.
/// Throws InputError if dt * spectral radius >= 0.1 at t0 and
/// NumericalError if the norm drifts by more than 1e-6.
Trajectory evolve(const ModelSpec& model, const Schedule& schedule, const StateVector& psi0,
                  double t0, double t1, double dt);

double energy_mean(const ComplexVector& psi, const HermitianMatrix& h);

/// sqrt(<H^2> - <H>^2), evaluated as |(H - <H>) psi| so that eigenstates
/// give zero to rounding.
double energy_uncertainty(const StateVector& psi, const HermitianMatrix& h);

struct AaStep {
  double t = 0.0;
  double rate_measured = 0.0;  // 2 arccos|<psi(t)|psi(t+dt)>| / dt
  double rate_predicted = 0.0; // 2 Delta E averaged over the step
  double relative_deviation = 0.0;
};

struct AaReport {
  std::vector<AaStep> steps;
  std::vector<double> accumulated_angle;  // 2 * integral of Delta E, per recorded time
  double max_relative_deviation = 0.0;
};

/// Rates below this floor (energy units) are compared absolutely.
inline constexpr double kRateFloor = 1e-6;

AaReport aa_consistency(const Trajectory& traj);

enum class RatioStatus { ratio, exact_zero, unpredicted };

struct AdiabaticPoint {
  double t = 0.0;
  double energy_uncertainty = 0.0;
  double predicted = 0.0;  // sqrt(g(lambda', lambda')) with the eigenstate metric
  double ratio = 0.0;      // valid when status == ratio
  RatioStatus status = RatioStatus::ratio;
  double leakage = 0.0;    // 1 - |<phi_level(lambda(t))|psi(t)>|^2
};

struct AdiabaticReport {
  std::vector<AdiabaticPoint> points;
  double max_leakage = 0.0;
  bool non_adiabatic = false;  // max_leakage > 0.1
};

inline constexpr double kZeroRate = 1e-10;
inline constexpr double kNonAdiabaticLeakage = 0.1;

AdiabaticReport adiabatic_diagnostic(const ModelSpec& model, const Schedule& schedule, Index level,
                                     const Trajectory& traj, unsigned threads = 1);

const char* to_string(RatioStatus s);

}  // namespace qgeom
