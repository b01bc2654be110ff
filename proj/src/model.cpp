#include "qgeom/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "qgeom/error.hpp"

namespace qgeom {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ModelSpec::ModelSpec(std::string name, std::vector<std::string> parameters,
                     std::vector<ModelTerm> terms)
    : name_(std::move(name)), parameters_(std::move(parameters)), terms_(std::move(terms)) {
  if (terms_.empty()) {
    throw InputError("model '" + name_ + "' has no terms");
  }
  std::set<std::string> seen;
  for (const auto& p : parameters_) {
    if (p.empty() || !seen.insert(p).second) {
      throw InputError("model '" + name_ + "': empty or duplicate parameter name '" + p + "'");
    }
  }
  dim_ = terms_.front().matrix.dim();
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    if (terms_[k].matrix.dim() != dim_) {
      throw InputError("model '" + name_ + "': term " + std::to_string(k) + " has dimension " +
                       std::to_string(terms_[k].matrix.dim()) + ", expected " +
                       std::to_string(dim_));
    }
    if (terms_[k].coeff.variables() != parameters_) {
      throw InputError("model '" + name_ + "': term " + std::to_string(k) +
                       " coefficient was not parsed against the model parameters");
    }
  }
}

std::optional<Index> ModelSpec::parameter_index(const std::string& name) const {
  for (std::size_t i = 0; i < parameters_.size(); ++i) {
    if (parameters_[i] == name) {
      return static_cast<Index>(i);
    }
  }
  return std::nullopt;
}

Index ModelSpec::require_parameter(const std::string& name) const {
  if (auto idx = parameter_index(name)) {
    return *idx;
  }
  throw InputError("model '" + name_ + "' has no parameter '" + name + "'");
}

ParameterPoint::ParameterPoint(RealVector values) : values_(std::move(values)) {
  if (!values_.allFinite()) {
    throw InputError("parameter point has non-finite coordinates");
  }
}

ParameterPoint::ParameterPoint(std::initializer_list<double> values)
    : ParameterPoint(RealVector::Map(values.begin(), static_cast<Index>(values.size()))) {}

ParameterPoint ParameterPoint::displaced(Index mu, double step) const {
  RealVector v = values_;
  v[mu] += step;
  return ParameterPoint(std::move(v));
}

std::string ParameterPoint::describe(const ModelSpec& model) const {
  std::string s = "(";
  for (Index i = 0; i < values_.size(); ++i) {
    if (i) s += ", ";
    if (i < model.num_parameters()) {
      s += model.parameters()[static_cast<std::size_t>(i)] + "=";
    }
    s += fmt_double(values_[i]);
  }
  return s + ")";
}

namespace {

void check_point(const ModelSpec& model, const ParameterPoint& point) {
  if (point.size() != model.num_parameters()) {
    throw InputError("model '" + model.name() + "' takes " +
                     std::to_string(model.num_parameters()) + " parameters, point has " +
                     std::to_string(point.size()));
  }
}

template <typename Fn>
auto with_term_context(std::size_t k, Fn&& fn) {
  try {
    return fn();
  } catch (const EvaluationError& e) {
    throw EvaluationError("term " + std::to_string(k) + ": " + e.what());
  }
}

}  // namespace

HermitianMatrix hamiltonian_at(const ModelSpec& model, const ParameterPoint& point) {
  check_point(model, point);
  const std::span<const double> values(point.values().data(),
                                       static_cast<std::size_t>(point.size()));
  ComplexMatrix h = ComplexMatrix::Zero(model.dim(), model.dim());
  for (std::size_t k = 0; k < model.terms().size(); ++k) {
    const auto& term = model.terms()[k];
    const double f = with_term_context(k, [&] { return term.coeff.evaluate(values); });
    h += f * term.matrix.matrix();
  }
  return HermitianMatrix(h);
}

HermitianMatrix hamiltonian_derivative_at(const ModelSpec& model, const ParameterPoint& point,
                                          Index mu) {
  check_point(model, point);
  if (mu < 0 || mu >= model.num_parameters()) {
    throw InputError("parameter index " + std::to_string(mu) + " out of range");
  }
  const std::span<const double> values(point.values().data(),
                                       static_cast<std::size_t>(point.size()));
  ComplexMatrix dh = ComplexMatrix::Zero(model.dim(), model.dim());
  for (std::size_t k = 0; k < model.terms().size(); ++k) {
    const auto& term = model.terms()[k];
    if (!term.coeff.depends_on(mu)) {
      continue;
    }
    const double df =
        with_term_context(k, [&] { return term.coeff.evaluate_with_derivative(values, mu).second; });
    dh += df * term.matrix.matrix();
  }
  return HermitianMatrix(dh);
}

std::vector<HermitianMatrix> hamiltonian_gradient(const ModelSpec& model,
                                                  const ParameterPoint& point) {
  std::vector<HermitianMatrix> grad;
  grad.reserve(static_cast<std::size_t>(model.num_parameters()));
  for (Index mu = 0; mu < model.num_parameters(); ++mu) {
    grad.push_back(hamiltonian_derivative_at(model, point, mu));
  }
  return grad;
}

namespace pauli {
ComplexMatrix identity() { return ComplexMatrix::Identity(2, 2); }
ComplexMatrix x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
ComplexMatrix y() {
  ComplexMatrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}
ComplexMatrix z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
}  // namespace pauli

ModelSpec spin_half(double mu_times_B) {
  if (mu_times_B == 0.0 || !std::isfinite(mu_times_B)) {
    throw InputError("spin_half needs a finite non-zero field (mu*B), got " + fmt_double(mu_times_B));
  }
  const std::vector<std::string> params{"theta", "phi"};
  std::vector<ModelTerm> terms{
      {HermitianMatrix(mu_times_B * pauli::x()), Expr::parse("sin(theta)*cos(phi)", params)},
      {HermitianMatrix(mu_times_B * pauli::y()), Expr::parse("sin(theta)*sin(phi)", params)},
      {HermitianMatrix(mu_times_B * pauli::z()), Expr::parse("cos(theta)", params)},
  };
  return ModelSpec("spin_half", params, std::move(terms));
}

ModelSpec qi_wu_zhang(double mass) {
  const std::vector<std::string> params{"kx", "ky"};
  std::vector<ModelTerm> terms{
      {HermitianMatrix(pauli::x()), Expr::parse("sin(kx)", params)},
      {HermitianMatrix(pauli::y()), Expr::parse("sin(ky)", params)},
      {HermitianMatrix(pauli::z()), Expr::parse(fmt_double(mass) + " + cos(kx) + cos(ky)", params)},
  };
  return ModelSpec("qi_wu_zhang", params, std::move(terms));
}

ModelSpec doubled(const ModelSpec& model) {
  const Index n = model.dim();
  std::vector<ModelTerm> terms;
  for (const auto& t : model.terms()) {
    ComplexMatrix m = ComplexMatrix::Zero(2 * n, 2 * n);
    m.topLeftCorner(n, n) = t.matrix.matrix();
    m.bottomRightCorner(n, n) = t.matrix.matrix();
    terms.push_back({HermitianMatrix(m), t.coeff});
  }
  return ModelSpec(model.name() + "_doubled", model.parameters(), std::move(terms));
}

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw InputError("model file: " + where + ": " + what);
}

ComplexMatrix parse_matrix(const json& j, Index dim, const std::string& where) {
  if (!j.is_array() || static_cast<Index>(j.size()) != dim) {
    schema_error(where, "matrix must be an array of " + std::to_string(dim) + " rows");
  }
  ComplexMatrix m(dim, dim);
  for (Index r = 0; r < dim; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != dim) {
      schema_error(where + " row " + std::to_string(r),
                   "expected " + std::to_string(dim) + " entries");
    }
    for (Index c = 0; c < dim; ++c) {
      const json& e = row[static_cast<std::size_t>(c)];
      const std::string loc = where + " entry [" + std::to_string(r) + "," + std::to_string(c) + "]";
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        schema_error(loc, "complex entries are [re, im] number pairs");
      }
      m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
      if (!std::isfinite(m(r, c).real()) || !std::isfinite(m(r, c).imag())) {
        schema_error(loc, "non-finite value");
      }
    }
  }
  return m;
}

}  // namespace

ModelSpec parse_model_spec(const json& doc) {
  if (!doc.is_object()) {
    schema_error("document", "expected a JSON object");
  }
  for (const char* key : {"name", "dim", "parameters", "terms"}) {
    if (!doc.contains(key)) {
      schema_error("document", std::string("missing field '") + key + "'");
    }
  }
  if (!doc["name"].is_string()) schema_error("name", "must be a string");
  if (!doc["dim"].is_number_integer() || doc["dim"].get<long long>() <= 0) {
    schema_error("dim", "must be a positive integer");
  }
  if (!doc["parameters"].is_array()) schema_error("parameters", "must be an array of strings");
  if (!doc["terms"].is_array() || doc["terms"].empty()) {
    schema_error("terms", "must be a non-empty array");
  }

  const auto dim = static_cast<Index>(doc["dim"].get<long long>());
  std::vector<std::string> params;
  for (const auto& p : doc["parameters"]) {
    if (!p.is_string()) schema_error("parameters", "must be an array of strings");
    params.push_back(p.get<std::string>());
  }

  std::vector<ModelTerm> terms;
  for (std::size_t k = 0; k < doc["terms"].size(); ++k) {
    const json& t = doc["terms"][k];
    const std::string where = "term " + std::to_string(k);
    if (!t.is_object() || !t.contains("matrix") || !t.contains("coeff") || !t["coeff"].is_string()) {
      schema_error(where, "expected {\"matrix\": [...], \"coeff\": \"expression\"}");
    }
    const ComplexMatrix m = parse_matrix(t["matrix"], dim, where);
    const auto asym = HermitianMatrix::asymmetry(m);
    if (asym.value > 1e-12) {
      schema_error(where, "matrix is not Hermitian: entry [" + std::to_string(asym.row) + "," +
                              std::to_string(asym.col) + "] differs from conj of [" +
                              std::to_string(asym.col) + "," + std::to_string(asym.row) +
                              "] by " + fmt_double(asym.value));
    }
    Expr coeff = [&] {
      try {
        return Expr::parse(t["coeff"].get<std::string>(), params);
      } catch (const ParseError& e) {
        throw ParseError("model file: " + where + " coeff: " + e.detail(), e.offset());
      }
    }();
    terms.push_back({HermitianMatrix(m), std::move(coeff)});
  }
  return ModelSpec(doc["name"].get<std::string>(), std::move(params), std::move(terms));
}

ModelSpec load_model_spec(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw InputError("cannot open model file '" + file.string() + "'");
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw InputError("model file '" + file.string() + "' is not valid JSON: " + e.what());
  }
  return parse_model_spec(doc);
}

json model_to_json(const ModelSpec& model) {
  json terms = json::array();
  for (const auto& t : model.terms()) {
    json rows = json::array();
    for (Index r = 0; r < model.dim(); ++r) {
      json row = json::array();
      for (Index c = 0; c < model.dim(); ++c) {
        const Complex v = t.matrix.matrix()(r, c);
        row.push_back({v.real(), v.imag()});
      }
      rows.push_back(std::move(row));
    }
    terms.push_back({{"matrix", std::move(rows)}, {"coeff", t.coeff.to_string()}});
  }
  return {{"name", model.name()},
          {"dim", model.dim()},
          {"parameters", model.parameters()},
          {"terms", std::move(terms)}};
}

}  // namespace qgeom
