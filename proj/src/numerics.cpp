#include "qgeom/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qgeom/error.hpp"

namespace qgeom {

HermitianMatrix::HermitianMatrix(const ComplexMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InputError("Hermitian matrix must be square and non-empty, got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) {
    throw InputError("matrix has non-finite entries");
  }
  const Index n = m.rows();
  m_.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    m_(j, j) = Complex(m(j, j).real(), 0.0);
    for (Index i = j + 1; i < n; ++i) {
      const Complex v = 0.5 * (m(i, j) + std::conj(m(j, i)));
      m_(i, j) = v;
      m_(j, i) = std::conj(v);
    }
  }
}

HermitianMatrix HermitianMatrix::zero(Index n) {
  return HermitianMatrix(ComplexMatrix::Zero(n, n));
}

HermitianMatrix::Asymmetry HermitianMatrix::asymmetry(const ComplexMatrix& m) {
  Asymmetry worst;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = i; j < m.cols(); ++j) {
      const double d = std::abs(m(i, j) - std::conj(m(j, i)));
      if (d > worst.value) {
        worst = {d, i, j};
      }
    }
  }
  return worst;
}

StateVector::StateVector(const ComplexVector& amplitudes) {
  if (amplitudes.size() == 0 || !amplitudes.allFinite()) {
    throw InputError("state vector must be non-empty and finite");
  }
  const double norm = amplitudes.norm();
  if (norm == 0.0) {
    throw InputError("state vector has zero norm");
  }
  z_ = amplitudes / norm;
}

Index EigenSystem::group_of(Index level) const {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (std::find(groups[g].begin(), groups[g].end(), level) != groups[g].end()) {
      return static_cast<Index>(g);
    }
  }
  throw InputError("level " + std::to_string(level) + " out of range (dimension " +
                   std::to_string(size()) + ")");
}

double EigenSystem::gap(Index level) const {
  const auto& members = groups[static_cast<std::size_t>(group_of(level))];
  double best = std::numeric_limits<double>::infinity();
  for (Index n = 0; n < size(); ++n) {
    if (std::find(members.begin(), members.end(), n) == members.end()) {
      best = std::min(best, std::abs(energies[n] - energies[level]));
    }
  }
  return best;
}

double EigenSystem::spectral_range() const {
  return size() == 0 ? 0.0 : energies[size() - 1] - energies[0];
}

double default_degeneracy_tol(const RealVector& energies) {
  const double range = energies.size() ? energies.maxCoeff() - energies.minCoeff() : 0.0;
  return 1e-9 * std::max(1.0, range);
}

std::vector<std::vector<Index>> degeneracy_groups(std::span<const double> energies, double tol) {
  std::vector<std::vector<Index>> groups;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (i == 0 || energies[i] - energies[i - 1] > tol) {
      groups.emplace_back();
    }
    groups.back().push_back(static_cast<Index>(i));
  }
  return groups;
}

EigenSystem hermitian_eigensystem(const HermitianMatrix& h, std::optional<double> degeneracy_tol) {
  if (degeneracy_tol && !(*degeneracy_tol > 0.0)) {
    throw InputError("degeneracy tolerance must be positive");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Hermitian eigensolver did not converge");
  }
  EigenSystem es;
  es.energies = solver.eigenvalues();
  es.vectors = solver.eigenvectors();
  es.degeneracy_tol = degeneracy_tol.value_or(default_degeneracy_tol(es.energies));
  es.groups = degeneracy_groups(std::span<const double>(es.energies.data(), es.energies.size()),
                                es.degeneracy_tol);
  return es;
}

double one_minus_overlap_modulus(const ComplexVector& a, const ComplexVector& b) {
  const Complex o = a.dot(b);
  const double perp = (b - a * o).squaredNorm();
  return perp / (1.0 + std::abs(o));
}

double overlap_angle(const ComplexVector& a, const ComplexVector& b) {
  const Complex o = a.dot(b);
  const double perp = (b - a * o).norm();
  return 2.0 * std::atan2(perp, std::abs(o));
}

}  // namespace qgeom

namespace qgeom {

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InputError("log_log_slope needs two equally long series of length >= 2");
  }
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw NumericalError("log_log_slope needs positive data");
    }
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qgeom
