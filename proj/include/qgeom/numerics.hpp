#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qgeom {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Square complex matrix with entry(i,j) == conj(entry(j,i)) bit for bit.
/// Construction symmetrizes; non-finite or non-square input throws InputError.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const ComplexMatrix& m);

  static HermitianMatrix zero(Index n);

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Index dim() const noexcept { return m_.rows(); }

  /// Largest |m(i,j) - conj(m(j,i))| and where it occurs.
  struct Asymmetry {
    double value = 0.0;
    Index row = 0;
    Index col = 0;
  };
  static Asymmetry asymmetry(const ComplexMatrix& m);

 private:
  ComplexMatrix m_;
};

/// Unit-norm state vector (normalized on construction).
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(const ComplexVector& amplitudes);

  const ComplexVector& amplitudes() const noexcept { return z_; }
  Index dim() const noexcept { return z_.size(); }

 private:
  ComplexVector z_;
};

/// Spectrum at one parameter point. Eigenvector phases are arbitrary.
struct EigenSystem {
  RealVector energies;   // ascending
  ComplexMatrix vectors; // column i belongs to energies[i]
  std::vector<std::vector<Index>> groups;
  double degeneracy_tol = 0.0;

  Index size() const noexcept { return energies.size(); }
  ComplexVector vector(Index i) const { return vectors.col(i); }

  /// Index into `groups` of the cluster containing `level`.
  Index group_of(Index level) const;
  /// Distance from energies[level] to the nearest level outside its cluster
  /// (infinity for a one-level spectrum).
  double gap(Index level) const;
  double spectral_range() const;
};

double default_degeneracy_tol(const RealVector& energies);

/// Maximal clusters of an ascending list where consecutive gaps are <= tol.
std::vector<std::vector<Index>> degeneracy_groups(std::span<const double> energies, double tol);

EigenSystem hermitian_eigensystem(const HermitianMatrix& h,
                                  std::optional<double> degeneracy_tol = std::nullopt);

// Overlap geometry. All of these only depend on |<a|b>| and therefore on
// rays, not on representatives.

/// 1 - |<a|b>| for unit vectors, computed as |b_perp|^2 / (1 + |<a|b>|),
/// which keeps full relative precision when a and b are close.
double one_minus_overlap_modulus(const ComplexVector& a, const ComplexVector& b);

/// Fubini-Study angle 2*arccos|<a|b>| in [0, pi] for unit vectors, evaluated
/// as 2*atan2(|b_perp|, |<a|b>|).
double overlap_angle(const ComplexVector& a, const ComplexVector& b);

}  // namespace qgeom

namespace qgeom {

/// Least-squares slope of log(y) against log(x); the observed convergence
/// order when x are step sizes and y errors.
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace qgeom
