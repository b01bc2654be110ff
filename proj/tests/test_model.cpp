#include <doctest.h>

#include <cmath>
#include <string>

#include "oracles.hpp"
#include "qgeom/model.hpp"

using namespace qgeom;

namespace {
const std::string kData = QGEOM_TEST_DATA;

std::string error_of(const std::string& file) {
  try {
    load_model_spec(kData + "/" + file);
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}
}  // namespace

TEST_CASE("spin-half hamiltonian at simple points") {
  const ModelSpec m = spin_half(0.7);
  CHECK(oracle::max_abs(hamiltonian_at(m, {0.0, 0.0}).matrix() - 0.7 * oracle::sigma_z()) < 1e-15);
  CHECK(oracle::max_abs(hamiltonian_at(m, {oracle::kPi / 2, 0.0}).matrix() - 0.7 * oracle::sigma_x()) < 1e-15);
  CHECK(oracle::max_abs(hamiltonian_derivative_at(m, {0.0, 0.0}, 0).matrix() - 0.7 * oracle::sigma_x()) < 1e-15);
  CHECK(oracle::max_abs(hamiltonian_derivative_at(m, {0.0, 0.0}, 1).matrix()) == 0.0);
  CHECK_THROWS_AS(hamiltonian_at(m, {0.0}), InputError);
  CHECK_THROWS_AS(spin_half(0.0), InputError);
}

TEST_CASE("linear combination of terms") {
  oracle::Rng rng(1);
  const ComplexMatrix h1 = oracle::random_hermitian(rng, 3), h2 = oracle::random_hermitian(rng, 3);
  const ModelSpec m("lin", {"lambda1"},
                    {{HermitianMatrix(h1), Expr::parse("1", {"lambda1"})},
                     {HermitianMatrix(h2), Expr::parse("lambda1", {"lambda1"})}});
  CHECK(oracle::max_abs(hamiltonian_at(m, {2.0}).matrix() - (h1 + 2.0 * h2)) < 1e-14);
  CHECK(oracle::max_abs(hamiltonian_derivative_at(m, {2.0}, 0).matrix() - HermitianMatrix(h2).matrix()) == 0.0);
}

TEST_CASE("model validation") {
  const std::vector<std::string> p{"x"};
  const HermitianMatrix a(oracle::sigma_x());
  const HermitianMatrix b(ComplexMatrix::Identity(3, 3));
  CHECK_THROWS_AS(ModelSpec("m", p, {}), InputError);
  CHECK_THROWS_AS(ModelSpec("m", {"x", "x"}, {{a, Expr::parse("1", {"x", "x"})}}), InputError);
  CHECK_THROWS_AS(ModelSpec("m", p, {{a, Expr::parse("x", p)}, {b, Expr::parse("x", p)}}), InputError);
  CHECK_THROWS_AS(ModelSpec("m", p, {{a, Expr::parse("y", {"y"})}}), InputError);
}

TEST_CASE("derivatives agree with central differences of H") {
  oracle::Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const ModelSpec m = oracle::random_model(rng, 2 + trial % 4);
    const ParameterPoint p{oracle::uniform(rng, -1, 1), oracle::uniform(rng, -1, 1), oracle::uniform(rng, -1, 1)};
    const auto grad = hamiltonian_gradient(m, p);
    for (Index mu = 0; mu < 3; ++mu) {
      const double h = 1e-6;
      const ComplexMatrix fd =
          (hamiltonian_at(m, p.displaced(mu, h)).matrix() - hamiltonian_at(m, p.displaced(mu, -h)).matrix()) / (2 * h);
      const double scale = std::max(1.0, oracle::max_abs(grad[static_cast<std::size_t>(mu)].matrix()));
      REQUIRE(oracle::max_abs(fd - grad[static_cast<std::size_t>(mu)].matrix()) < 1e-6 * scale);
    }
  }
}

TEST_CASE("spin-half spectrum and eigenvectors") {
  const double mu_b = 1.3;
  const ModelSpec m = spin_half(mu_b);
  oracle::Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const double th = oracle::uniform(rng, 0, oracle::kPi), ph = oracle::uniform(rng, 0, 2 * oracle::kPi);
    const auto es = hermitian_eigensystem(hamiltonian_at(m, {th, ph}));
    CHECK(es.energies[0] == doctest::Approx(-mu_b).epsilon(1e-14));
    CHECK(es.energies[1] == doctest::Approx(mu_b).epsilon(1e-14));
    CHECK(std::abs(oracle::spin_up(th, ph).dot(es.vector(1))) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(oracle::spin_down(th, ph).dot(es.vector(0))) == doctest::Approx(1.0).epsilon(1e-13));
  }
  CHECK(hermitian_eigensystem(hamiltonian_at(m, {oracle::kPi / 3, 0.1})).gap(1) == doctest::Approx(2 * mu_b));
}

TEST_CASE("model files") {
  const ModelSpec m = load_model_spec(kData + "/spin_half_model.json");
  CHECK(m.terms().size() == 3);
  CHECK(m.dim() == 2);
  CHECK(oracle::max_abs(hamiltonian_at(m, {0.4, 1.1}).matrix() - hamiltonian_at(spin_half(1.0), {0.4, 1.1}).matrix()) < 1e-15);

  const std::string herm = error_of("non_hermitian_model.json");
  CHECK(herm.find("[1,0]") != std::string::npos);
  const std::string undeclared = error_of("undeclared_parameter_model.json");
  CHECK(undeclared.find("term 1") != std::string::npos);
  CHECK(undeclared.find("'y'") != std::string::npos);
  CHECK(error_of("does_not_exist.json").find("cannot open") != std::string::npos);

  // serialize and parse back
  const ModelSpec back = parse_model_spec(model_to_json(qi_wu_zhang(-1.2)));
  CHECK(oracle::max_abs(hamiltonian_at(back, {0.3, -2.0}).matrix() -
                        hamiltonian_at(qi_wu_zhang(-1.2), {0.3, -2.0}).matrix()) == 0.0);
}

TEST_CASE("doubled model is a direct sum") {
  const ModelSpec d = doubled(spin_half(1.0));
  CHECK(d.dim() == 4);
  const auto es = hermitian_eigensystem(hamiltonian_at(d, {0.5, 0.5}));
  CHECK(es.groups.size() == 2);
  CHECK(es.groups[0].size() == 2);
}

TEST_CASE("point labels") {
  CHECK(ParameterPoint{0.5, 1.0}.describe(spin_half(1.0)) == "(theta=0.5, phi=1)");
}
