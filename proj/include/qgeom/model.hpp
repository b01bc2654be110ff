#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgeom/expr.hpp"
#include "qgeom/numerics.hpp"

namespace qgeom {

/// One term f(lambda) * H_k of a Hamiltonian family.
struct ModelTerm {
  HermitianMatrix matrix;
  Expr coeff;
};

/// Hamiltonian family H(lambda) = sum_k f_k(lambda) H_k.
class ModelSpec {
 public:
  ModelSpec(std::string name, std::vector<std::string> parameters, std::vector<ModelTerm> terms);

  const std::string& name() const noexcept { return name_; }
  Index dim() const noexcept { return dim_; }
  Index num_parameters() const noexcept { return static_cast<Index>(parameters_.size()); }
  const std::vector<std::string>& parameters() const noexcept { return parameters_; }
  const std::vector<ModelTerm>& terms() const noexcept { return terms_; }

  std::optional<Index> parameter_index(const std::string& name) const;
  /// Like parameter_index but throws InputError for unknown names.
  Index require_parameter(const std::string& name) const;

 private:
  std::string name_;
  Index dim_ = 0;
  std::vector<std::string> parameters_;
  std::vector<ModelTerm> terms_;
};

/// A point lambda of the parameter manifold; length matches the model.
class ParameterPoint {
 public:
  ParameterPoint() = default;
  explicit ParameterPoint(RealVector values);
  ParameterPoint(std::initializer_list<double> values);

  const RealVector& values() const noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }

  ParameterPoint displaced(const RealVector& delta) const { return ParameterPoint(values_ + delta); }
  ParameterPoint displaced(Index mu, double step) const;

  /// "(theta=0.5, phi=1)" style label for error messages.
  std::string describe(const ModelSpec& model) const;

 private:
  RealVector values_;
};

HermitianMatrix hamiltonian_at(const ModelSpec& model, const ParameterPoint& point);

/// dH/dlambda^mu = sum_k (d f_k / d lambda^mu) H_k, exact via dual numbers.
HermitianMatrix hamiltonian_derivative_at(const ModelSpec& model, const ParameterPoint& point,
                                          Index mu);

/// All partial derivatives at once.
std::vector<HermitianMatrix> hamiltonian_gradient(const ModelSpec& model,
                                                  const ParameterPoint& point);

namespace pauli {
ComplexMatrix identity();
ComplexMatrix x();
ComplexMatrix y();
ComplexMatrix z();
}  // namespace pauli

/// H = mu_times_B * (sin t cos p sx + sin t sin p sy + cos t sz), parameters
/// (theta, phi). Levels: 0 is -mu_times_B, 1 is +mu_times_B when mu_times_B > 0.
ModelSpec spin_half(double mu_times_B);

/// Two-band lattice model on the (kx, ky) torus:
/// H = sin kx sx + sin ky sy + (mass + cos kx + cos ky) sz.
/// Gapped with Chern number 0 or +-1 unless mass is in {0, +-2}.
ModelSpec qi_wu_zhang(double mass);

/// Block-diagonal direct sum of a model with itself (every level doubled).
ModelSpec doubled(const ModelSpec& model);

ModelSpec parse_model_spec(const nlohmann::json& doc);
ModelSpec load_model_spec(const std::filesystem::path& file);
nlohmann::json model_to_json(const ModelSpec& model);

}  // namespace qgeom
