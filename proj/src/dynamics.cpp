#include "qgeom/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <optional>

#include "qgeom/error.hpp"
#include "qgeom/parallel.hpp"
#include "qgeom/qgt.hpp"

namespace qgeom {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double spectral_radius(const HermitianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

Schedule Schedule::parse(const ModelSpec& model,
                         const std::vector<std::pair<std::string, std::string>>& coords) {
  std::vector<std::optional<Expr>> slots(static_cast<std::size_t>(model.num_parameters()));
  for (const auto& [name, src] : coords) {
    slots[static_cast<std::size_t>(model.require_parameter(name))] = Expr::parse(src, {"t"});
  }
  Schedule s;
  for (std::size_t mu = 0; mu < slots.size(); ++mu) {
    if (!slots[mu]) {
      throw InputError("schedule does not cover parameter '" + model.parameters()[mu] + "'");
    }
    s.coords.push_back(*slots[mu]);
  }
  return s;
}

ParameterPoint Schedule::at(double t) const {
  RealVector v(static_cast<Index>(coords.size()));
  const double arg[] = {t};
  for (std::size_t mu = 0; mu < coords.size(); ++mu) {
    v[static_cast<Index>(mu)] = coords[mu].evaluate(std::span<const double>(arg));
  }
  return ParameterPoint(std::move(v));
}

RealVector Schedule::rate(double t) const {
  RealVector v(static_cast<Index>(coords.size()));
  const double arg[] = {t};
  for (std::size_t mu = 0; mu < coords.size(); ++mu) {
    v[static_cast<Index>(mu)] =
        coords[mu].evaluate_with_derivative(std::span<const double>(arg), 0).second;
  }
  return v;
}

double energy_mean(const ComplexVector& psi, const HermitianMatrix& h) {
  return psi.dot(h.matrix() * psi).real();
}

double energy_uncertainty(const StateVector& psi, const HermitianMatrix& h) {
  if (psi.dim() != h.dim()) {
    throw InputError("energy_uncertainty: dimension mismatch");
  }
  const ComplexVector& z = psi.amplitudes();
  const ComplexVector hz = h.matrix() * z;
  const double mean = z.dot(hz).real();
  return (hz - mean * z).norm();
}

Trajectory evolve(const ModelSpec& model, const Schedule& schedule, const StateVector& psi0,
                  double t0, double t1, double dt) {
  if (!(dt > 0.0) || !(t1 > t0)) {
    throw InputError("evolve needs dt > 0 and t1 > t0");
  }
  if (psi0.dim() != model.dim()) {
    throw InputError("initial state dimension does not match the model");
  }
  if (static_cast<Index>(schedule.coords.size()) != model.num_parameters()) {
    throw InputError("schedule does not match the model parameters");
  }
  const auto steps = static_cast<Index>(std::max(1.0, std::ceil((t1 - t0) / dt - 1e-9)));
  const double h = (t1 - t0) / static_cast<double>(steps);

  auto ham = [&](double t) {
    try {
      return hamiltonian_at(model, schedule.at(t));
    } catch (const NumericalError& e) {
      throw NumericalError("at t=" + fmt(t) + ": " + e.what());
    }
  };

  Trajectory traj;
  traj.dt = h;
  HermitianMatrix h_now = ham(t0);
  if (const double rho = spectral_radius(h_now); h * rho >= kMaxStepTimesRadius) {
    throw InputError("dt * spectral radius = " + fmt(h * rho) + " >= 0.1 at t0; use dt <= " +
                     fmt(0.5 * kMaxStepTimesRadius / rho));
  }

  const Complex minus_i(0.0, -1.0);
  ComplexVector psi = psi0.amplitudes();

  auto record = [&](double t, const HermitianMatrix& hm) {
    const StateVector unit(psi);
    traj.times.push_back(t);
    traj.states.push_back(unit.amplitudes());
    traj.energy_mean.push_back(energy_mean(unit.amplitudes(), hm));
    traj.energy_uncertainty.push_back(energy_uncertainty(unit, hm));
  };
  record(t0, h_now);

  for (Index n = 0; n < steps; ++n) {
    const double t = t0 + static_cast<double>(n) * h;
    const double t_next = t0 + static_cast<double>(n + 1) * h;
    const HermitianMatrix h_mid = ham(t + 0.5 * h);
    const HermitianMatrix h_end = ham(t_next);

    const ComplexVector k1 = minus_i * (h_now.matrix() * psi);
    const ComplexVector k2 = minus_i * (h_mid.matrix() * (psi + 0.5 * h * k1));
    const ComplexVector k3 = minus_i * (h_mid.matrix() * (psi + 0.5 * h * k2));
    const ComplexVector k4 = minus_i * (h_end.matrix() * (psi + h * k3));
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double drift = std::abs(psi.norm() - 1.0);
    traj.max_norm_drift = std::max(traj.max_norm_drift, drift);
    if (drift > kMaxNormDrift) {
      throw NumericalError("norm drift " + fmt(drift) + " exceeds 1e-6 at t=" + fmt(t_next) +
                           "; retry with dt <= " + fmt(0.5 * h));
    }
    if ((n + 1) % 64 == 0) {
      if (const double rho = spectral_radius(h_end); h * rho >= kMaxStepTimesRadius) {
        traj.warnings.push_back("dt * spectral radius = " + fmt(h * rho) + " at t=" + fmt(t_next));
      }
    }
    h_now = h_end;
    record(t_next, h_now);
  }

  traj.step_angle.reserve(traj.states.size() - 1);
  for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
    traj.step_angle.push_back(overlap_angle(traj.states[i], traj.states[i + 1]));
  }
  return traj;
}

AaReport aa_consistency(const Trajectory& traj) {
  AaReport report;
  report.accumulated_angle.push_back(0.0);
  for (std::size_t i = 0; i < traj.step_angle.size(); ++i) {
    AaStep s;
    s.t = traj.times[i];
    s.rate_measured = traj.step_angle[i] / traj.dt;
    s.rate_predicted = traj.energy_uncertainty[i] + traj.energy_uncertainty[i + 1];
    s.relative_deviation =
        std::abs(s.rate_measured - s.rate_predicted) / std::max(s.rate_predicted, kRateFloor);
    report.max_relative_deviation = std::max(report.max_relative_deviation, s.relative_deviation);
    report.accumulated_angle.push_back(report.accumulated_angle.back() + s.rate_predicted * traj.dt);
    report.steps.push_back(s);
  }
  return report;
}

AdiabaticReport adiabatic_diagnostic(const ModelSpec& model, const Schedule& schedule, Index level,
                                     const Trajectory& traj, unsigned threads) {
  AdiabaticReport report;
  report.points.resize(traj.size());
  parallel_for(static_cast<Index>(traj.size()), threads, [&](Index idx) {
    const auto i = static_cast<std::size_t>(idx);
    const double t = traj.times[i];
    AdiabaticPoint& p = report.points[i];
    p.t = t;
    p.energy_uncertainty = traj.energy_uncertainty[i];

    const ParameterPoint lambda = schedule.at(t);
    const EigenSystem es = hermitian_eigensystem(hamiltonian_at(model, lambda));
    if (level < 0 || level >= es.size()) {
      throw InputError("level out of range");
    }
    QgtTensor q;
    try {
      q = qgt_sum_over_states(es, hamiltonian_gradient(model, lambda), level);
    } catch (const NumericalError& e) {
      throw NumericalError("at t=" + fmt(t) + ": " + e.what());
    }
    const RealVector rate = schedule.rate(t);
    p.predicted = std::sqrt(std::max(0.0, rate.dot(q.metric() * rate)));

    if (p.predicted > kZeroRate) {
      p.ratio = p.energy_uncertainty / p.predicted;
      p.status = RatioStatus::ratio;
    } else if (p.energy_uncertainty <= kZeroRate) {
      p.status = RatioStatus::exact_zero;
    } else {
      p.status = RatioStatus::unpredicted;
    }

    const ComplexVector phi = es.vector(level);
    const ComplexVector& psi = traj.states[i];
    p.leakage = (psi - phi * phi.dot(psi)).squaredNorm();
  });
  for (const auto& p : report.points) {
    report.max_leakage = std::max(report.max_leakage, p.leakage);
  }
  report.non_adiabatic = report.max_leakage > kNonAdiabaticLeakage;
  return report;
}

const char* to_string(RatioStatus s) {
  switch (s) {
    case RatioStatus::ratio: return "ratio";
    case RatioStatus::exact_zero: return "exact_zero";
    case RatioStatus::unpredicted: return "unpredicted";
  }
  return "?";
}

}  // namespace qgeom
