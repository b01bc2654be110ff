#include "qgeom/qgt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qgeom/error.hpp"

namespace qgeom {

namespace {

void check_derivatives(const EigenSystem& states, std::span<const HermitianMatrix> dH) {
  for (const auto& d : dH) {
    if (d.dim() != states.size()) {
      throw InputError("derivative matrix dimension does not match the eigensystem");
    }
  }
}

/// A(mu, n) = <v|dH_mu|phi_n> for every mu and every level n.
ComplexMatrix coupling_rows(const ComplexVector& v, const ComplexMatrix& vectors,
                            std::span<const HermitianMatrix> dH) {
  const auto k = static_cast<Index>(dH.size());
  ComplexMatrix a(k, vectors.cols());
  for (Index mu = 0; mu < k; ++mu) {
    a.row(mu) = v.adjoint() * dH[static_cast<std::size_t>(mu)].matrix() * vectors;
  }
  return a;
}

void make_hermitian_from_lower(ComplexMatrix& q) {
  for (Index mu = 0; mu < q.rows(); ++mu) {
    q(mu, mu) = Complex(q(mu, mu).real(), 0.0);
    for (Index nu = 0; nu < mu; ++nu) {
      q(nu, mu) = std::conj(q(mu, nu));
    }
  }
}

}  // namespace

NonAbelianQgt::NonAbelianQgt(Index rank, Index degeneracy)
    : rank_(rank),
      degeneracy_(degeneracy),
      blocks_(static_cast<std::size_t>(rank * rank), ComplexMatrix::Zero(degeneracy, degeneracy)) {}

QgtTensor qgt_sum_over_states(const EigenSystem& states, std::span<const HermitianMatrix> dH,
                              Index level) {
  check_derivatives(states, dH);
  const auto& group = states.groups[static_cast<std::size_t>(states.group_of(level))];
  if (group.size() != 1) {
    throw NumericalError("level " + std::to_string(level) + " is " +
                         std::to_string(group.size()) +
                         "-fold degenerate; use the non-Abelian tensor (qgt_nonabelian)");
  }
  const auto k = static_cast<Index>(dH.size());
  const ComplexMatrix a = coupling_rows(states.vector(level), states.vectors, dH);
  const double e0 = states.energies[level];

  ComplexMatrix q = ComplexMatrix::Zero(k, k);
  for (Index n = 0; n < states.size(); ++n) {
    if (n == level) {
      continue;
    }
    const double gap = e0 - states.energies[n];
    const double w = 1.0 / (gap * gap);
    for (Index mu = 0; mu < k; ++mu) {
      for (Index nu = 0; nu <= mu; ++nu) {
        q(mu, nu) += w * a(mu, n) * std::conj(a(nu, n));
      }
    }
  }
  make_hermitian_from_lower(q);

  QgtTensor out(std::move(q));
  out.min_gap = states.gap(level);
  out.near_degenerate = out.min_gap < kNearDegeneracyRelative * states.spectral_range();
  return out;
}

QgtTensor qgt_sum_over_states(const ModelSpec& model, const ParameterPoint& point, Index level,
                              std::optional<double> degeneracy_tol) {
  const EigenSystem es = hermitian_eigensystem(hamiltonian_at(model, point), degeneracy_tol);
  if (level < 0 || level >= es.size()) {
    throw InputError("level " + std::to_string(level) + " out of range for dimension " +
                     std::to_string(es.size()));
  }
  const auto dH = hamiltonian_gradient(model, point);
  try {
    return qgt_sum_over_states(es, dH, level);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " at " + point.describe(model));
  }
}

NonAbelianQgt qgt_nonabelian(const EigenSystem& states, std::span<const HermitianMatrix> dH,
                             std::span<const Index> group) {
  check_derivatives(states, dH);
  if (group.empty()) {
    throw InputError("degenerate group is empty");
  }
  std::vector<Index> sorted(group.begin(), group.end());
  std::sort(sorted.begin(), sorted.end());
  const auto& cluster = states.groups[static_cast<std::size_t>(states.group_of(sorted.front()))];
  if (cluster != sorted) {
    throw InputError("level set is not a maximal degenerate cluster (cluster has " +
                     std::to_string(cluster.size()) + " members)");
  }

  const auto k = static_cast<Index>(dH.size());
  const auto d = static_cast<Index>(sorted.size());
  double e0 = 0.0;
  for (Index i : sorted) e0 += states.energies[i];
  e0 /= static_cast<double>(d);

  std::vector<ComplexMatrix> a;  // a[i](mu, n) = <phi_i|dH_mu|phi_n>
  for (Index i : sorted) {
    a.push_back(coupling_rows(states.vector(i), states.vectors, dH));
  }

  NonAbelianQgt out(k, d);
  for (Index n = 0; n < states.size(); ++n) {
    if (std::binary_search(sorted.begin(), sorted.end(), n)) {
      continue;
    }
    const double gap = e0 - states.energies[n];
    const double w = 1.0 / (gap * gap);
    for (Index mu = 0; mu < k; ++mu) {
      for (Index nu = 0; nu < k; ++nu) {
        ComplexMatrix& b = out.block(mu, nu);
        for (Index i = 0; i < d; ++i) {
          for (Index j = 0; j < d; ++j) {
            b(i, j) += w * a[static_cast<std::size_t>(i)](mu, n) *
                       std::conj(a[static_cast<std::size_t>(j)](nu, n));
          }
        }
      }
    }
  }
  return out;
}

NonAbelianQgt qgt_nonabelian(const ModelSpec& model, const ParameterPoint& point,
                             std::span<const Index> group, std::optional<double> degeneracy_tol) {
  const EigenSystem es = hermitian_eigensystem(hamiltonian_at(model, point), degeneracy_tol);
  const auto dH = hamiltonian_gradient(model, point);
  return qgt_nonabelian(es, dH, group);
}

StateProvider level_state_provider(const ModelSpec& model, Index level,
                                   std::optional<double> degeneracy_tol) {
  if (level < 0 || level >= model.dim()) {
    throw InputError("level " + std::to_string(level) + " out of range for dimension " +
                     std::to_string(model.dim()));
  }
  return [model, level, degeneracy_tol](const ParameterPoint& p) -> ComplexVector {
    const EigenSystem es = hermitian_eigensystem(hamiltonian_at(model, p), degeneracy_tol);
    if (es.groups[static_cast<std::size_t>(es.group_of(level))].size() != 1) {
      throw NumericalError("level " + std::to_string(level) + " is degenerate at " +
                           p.describe(model));
    }
    return es.vector(level);
  };
}

namespace {

ComplexVector aligned_to(const ComplexVector& reference, ComplexVector v, double min_overlap,
                         const char* what) {
  const Complex o = reference.dot(v);
  const double m = std::abs(o);
  if (m < min_overlap) {
    throw NumericalError(std::string(what) + ": overlap " + std::to_string(m) +
                         " with neighboring state is below " + std::to_string(min_overlap) +
                         "; reduce the step");
  }
  v *= std::conj(o) / m;
  return v;
}

}  // namespace

DerivativeStencil aligned_stencil(const StateProvider& states, const ParameterPoint& point,
                                  double h) {
  if (!(h > 0.0)) {
    throw InputError("finite-difference step must be positive");
  }
  DerivativeStencil s;
  s.h = h;
  s.center = states(point);
  for (Index mu = 0; mu < point.size(); ++mu) {
    s.forward.push_back(aligned_to(s.center, states(point.displaced(mu, h)), 0.5, "stencil"));
    s.backward.push_back(aligned_to(s.center, states(point.displaced(mu, -h)), 0.5, "stencil"));
  }
  return s;
}

std::vector<ComplexVector> derivative_states(const DerivativeStencil& stencil) {
  std::vector<ComplexVector> d;
  for (Index mu = 0; mu < stencil.rank(); ++mu) {
    const auto i = static_cast<std::size_t>(mu);
    d.push_back((stencil.forward[i] - stencil.backward[i]) / (2.0 * stencil.h));
  }
  return d;
}

QgtTensor qgt_projector(const DerivativeStencil& stencil) {
  const auto d = derivative_states(stencil);
  const ComplexVector& c = stencil.center;
  std::vector<ComplexVector> perp;
  for (const auto& v : d) {
    perp.push_back(v - c * c.dot(v));
  }
  const Index k = stencil.rank();
  ComplexMatrix q = ComplexMatrix::Zero(k, k);
  for (Index mu = 0; mu < k; ++mu) {
    for (Index nu = 0; nu <= mu; ++nu) {
      q(mu, nu) = perp[static_cast<std::size_t>(mu)].dot(perp[static_cast<std::size_t>(nu)]);
    }
  }
  make_hermitian_from_lower(q);
  return QgtTensor(std::move(q));
}

QgtTensor qgt_projector(const ModelSpec& model, const ParameterPoint& point, Index level,
                        double h) {
  return qgt_projector(aligned_stencil(level_state_provider(model, level), point, h));
}

BerryConnection berry_connection(const DerivativeStencil& stencil) {
  const auto d = derivative_states(stencil);
  const double tol = std::max(1e-10, 10.0 * stencil.h * stencil.h);
  BerryConnection out;
  out.beta.resize(stencil.rank());
  for (Index mu = 0; mu < stencil.rank(); ++mu) {
    const Complex z = stencil.center.dot(d[static_cast<std::size_t>(mu)]);
    // i z is real up to the finite-difference residue Re z
    if (std::abs(z.real()) > tol) {
      throw NumericalError("Berry connection has imaginary residue " + std::to_string(z.real()) +
                           " in direction " + std::to_string(mu) + "; states not normalized?");
    }
    out.beta[mu] = -z.imag();
  }
  return out;
}

double plaquette_phase(const ComplexVector& a, const ComplexVector& b, const ComplexVector& c,
                       const ComplexVector& d) {
  const Complex loop = a.dot(d) * d.dot(c) * c.dot(b) * b.dot(a);
  return std::arg(loop);
}

namespace {

constexpr double kFdMinOverlap = 0.9;

double check_link(const ComplexVector& a, const ComplexVector& b) {
  const double m = std::abs(a.dot(b));
  if (m < kFdMinOverlap) {
    throw NumericalError("overlap " + std::to_string(m) +
                         " between neighboring states is below 0.9 (step too large or level "
                         "crossing inside the cell)");
  }
  return m;
}

}  // namespace

QgtTensor qgt_overlap_fd(const StateProvider& states, const ParameterPoint& point, double h) {
  if (!(h > 0.0)) {
    throw InputError("finite-difference step must be positive");
  }
  const Index k = point.size();
  const ComplexVector c = states(point);

  auto second_moment = [&](const RealVector& dir) {
    const ComplexVector plus = states(point.displaced(h * dir));
    const ComplexVector minus = states(point.displaced(-h * dir));
    check_link(c, plus);
    check_link(c, minus);
    return (one_minus_overlap_modulus(c, plus) + one_minus_overlap_modulus(c, minus)) / (h * h);
  };

  RealMatrix g = RealMatrix::Zero(k, k);
  for (Index mu = 0; mu < k; ++mu) {
    g(mu, mu) = second_moment(RealVector::Unit(k, mu));
  }
  for (Index mu = 0; mu < k; ++mu) {
    for (Index nu = 0; nu < mu; ++nu) {
      const RealVector dir = RealVector::Unit(k, mu) + RealVector::Unit(k, nu);
      g(mu, nu) = 0.5 * (second_moment(dir) - g(mu, mu) - g(nu, nu));
      g(nu, mu) = g(mu, nu);
    }
  }

  RealMatrix f = RealMatrix::Zero(k, k);
  for (Index mu = 0; mu < k; ++mu) {
    for (Index nu = 0; nu < mu; ++nu) {
      // corners of the h x h cell centered on the point, a -> b along nu,
      // b -> c along mu
      const RealVector em = 0.5 * h * RealVector::Unit(k, mu);
      const RealVector en = 0.5 * h * RealVector::Unit(k, nu);
      const ComplexVector a = states(point.displaced(-em - en));
      const ComplexVector b = states(point.displaced(-em + en));
      const ComplexVector cc = states(point.displaced(em + en));
      const ComplexVector d = states(point.displaced(em - en));
      check_link(a, b);
      check_link(b, cc);
      check_link(cc, d);
      check_link(d, a);
      f(nu, mu) = plaquette_phase(a, b, cc, d) / (h * h);
      f(mu, nu) = -f(nu, mu);
    }
  }

  ComplexMatrix q(k, k);
  for (Index mu = 0; mu < k; ++mu) {
    for (Index nu = 0; nu < k; ++nu) {
      q(mu, nu) = Complex(g(mu, nu), -0.5 * f(mu, nu));
    }
  }
  return QgtTensor(std::move(q));
}

QgtTensor qgt_overlap_fd(const ModelSpec& model, const ParameterPoint& point, Index level,
                         double h) {
  return qgt_overlap_fd(level_state_provider(model, level), point, h);
}

}  // namespace qgeom
