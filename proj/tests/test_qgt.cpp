#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "qgeom/qgt.hpp"

using namespace qgeom;

namespace {
const double kThird = oracle::kPi / 3;

// stencil built straight from a provider, no phase alignment
DerivativeStencil raw_stencil(const StateProvider& states, const ParameterPoint& p, double h) {
  DerivativeStencil s;
  s.h = h;
  s.center = states(p);
  for (Index mu = 0; mu < p.size(); ++mu) {
    s.forward.push_back(states(p.displaced(mu, h)));
    s.backward.push_back(states(p.displaced(mu, -h)));
  }
  return s;
}

EigenSystem rephased(EigenSystem es, oracle::Rng& rng) {
  for (Index i = 0; i < es.size(); ++i) es.vectors.col(i) *= oracle::random_phase(rng);
  return es;
}
}  // namespace

TEST_CASE("spin-half sum over states matches the analytic tensor") {
  oracle::Rng rng(31);
  for (double mu_b : {1.0, 0.37}) {
    const ModelSpec m = spin_half(mu_b);
    for (int i = 0; i < 30; ++i) {
      const double th = oracle::uniform(rng, 0.05, oracle::kPi - 0.05), ph = oracle::uniform(rng, 0, 6.28);
      const QgtTensor up = qgt_sum_over_states(m, {th, ph}, 1);
      const QgtTensor down = qgt_sum_over_states(m, {th, ph}, 0);
      CHECK(oracle::max_abs(up.metric() - oracle::spin_metric(th)) < 1e-12);
      CHECK(oracle::max_abs(down.metric() - oracle::spin_metric(th)) < 1e-12);
      CHECK(up.curvature()(0, 1) == doctest::Approx(oracle::spin_curvature_up(th)).epsilon(1e-12));
      CHECK(down.curvature()(0, 1) == doctest::Approx(-oracle::spin_curvature_up(th)).epsilon(1e-12));
      CHECK(up.curvature()(1, 0) == -up.curvature()(0, 1));
      // Q = g - (i/2) F entrywise
      const ComplexMatrix rebuilt = up.metric().cast<Complex>() - Complex(0, 0.5) * up.curvature().cast<Complex>();
      CHECK(oracle::max_abs(rebuilt - up.tensor()) == 0.0);
    }
  }
  const QgtTensor q = qgt_sum_over_states(spin_half(1.0), {kThird, 0.0}, 1);
  CHECK(q.curvature()(0, 1) == doctest::Approx(-std::sqrt(3.0) / 4).epsilon(1e-14));
  CHECK(q.min_gap == doctest::Approx(2.0));
  CHECK_FALSE(q.near_degenerate);
}

TEST_CASE("degenerate and near-degenerate levels") {
  const ModelSpec d = doubled(spin_half(1.0));
  try {
    qgt_sum_over_states(d, {0.5, 0.5}, 0);
    FAIL("expected degeneracy error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("qgt_nonabelian") != std::string::npos);
    CHECK(std::string(e.what()).find("theta=0.5") != std::string::npos);
  }
  ComplexMatrix base = ComplexMatrix::Zero(3, 3);
  base(1, 1) = 1e-8;
  base(2, 2) = 1.0;
  ComplexMatrix coupling = ComplexMatrix::Zero(3, 3);
  coupling(0, 2) = coupling(2, 0) = 1.0;
  const ModelSpec near("near", {"x"}, {{HermitianMatrix(base), Expr::parse("1", {"x"})},
                                       {HermitianMatrix(coupling), Expr::parse("x", {"x"})}});
  const QgtTensor q = qgt_sum_over_states(near, {0.0}, 0);
  CHECK(q.near_degenerate);
  CHECK(q.min_gap == doctest::Approx(1e-8));
}

TEST_CASE("sum over states is insensitive to eigenvector phases") {
  oracle::Rng rng(99);
  const ModelSpec m = oracle::random_model(rng, 5);
  const ParameterPoint p{0.3, -0.4, 0.8};
  const auto es = hermitian_eigensystem(hamiltonian_at(m, p));
  const auto dh = hamiltonian_gradient(m, p);
  for (Index level = 0; level < 5; ++level) {
    const QgtTensor ref = qgt_sum_over_states(es, dh, level);
    for (int t = 0; t < 200; ++t) {
      const QgtTensor q = qgt_sum_over_states(rephased(es, rng), dh, level);
      REQUIRE(oracle::max_abs(q.tensor() - ref.tensor()) <= 1e-12);
    }
  }
}

TEST_CASE("fuzzed models give Hermitian positive semidefinite Q") {
  oracle::Rng rng(123);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index dim = 2 + trial % 5;
    const ModelSpec m = oracle::random_model(rng, dim);
    const ParameterPoint p{oracle::uniform(rng, -2, 2), oracle::uniform(rng, -2, 2), oracle::uniform(rng, -2, 2)};
    const auto es = hermitian_eigensystem(hamiltonian_at(m, p));
    const Index level = trial % dim;
    if (es.groups[static_cast<std::size_t>(es.group_of(level))].size() != 1) continue;
    const QgtTensor q = qgt_sum_over_states(es, hamiltonian_gradient(m, p), level);
    const double scale = std::max(1.0, oracle::max_abs(q.tensor()));
    for (Index a = 0; a < 3; ++a)
      for (Index b = 0; b < 3; ++b) REQUIRE(q(a, b) == std::conj(q(b, a)));
    const auto ev = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(q.tensor()).eigenvalues();
    REQUIRE(ev.minCoeff() >= -1e-12 * scale);
    // g is PSD too, and |F_ab| <= 2 sqrt(g_aa g_bb)
    const auto gv = Eigen::SelfAdjointEigenSolver<RealMatrix>(q.metric()).eigenvalues();
    REQUIRE(gv.minCoeff() >= -1e-12 * scale);
    const RealMatrix g = q.metric(), f = q.curvature();
    for (Index a = 0; a < 3; ++a)
      for (Index b = 0; b < 3; ++b) REQUIRE(std::abs(f(a, b)) <= 2 * std::sqrt(g(a, a) * g(b, b)) + 1e-12 * scale);
    ++checked;
  }
  CHECK(checked > 150);
}

TEST_CASE("projector method agrees and converges at second order") {
  const ModelSpec m = spin_half(1.0);
  const ParameterPoint p{kThird, 0.3};
  const QgtTensor ref = qgt_sum_over_states(m, p, 1);
  std::vector<double> hs{1e-4, 5e-5, 2.5e-5}, errs;
  for (double h : hs) errs.push_back(oracle::max_abs(qgt_projector(m, p, 1, h).tensor() - ref.tensor()));
  CHECK(errs[0] <= 1e-6);
  CHECK(log_log_slope(hs, errs) == doctest::Approx(2.0).epsilon(0.1));

  oracle::Rng rng(6);
  const ModelSpec r = oracle::random_model(rng, 4);
  const ParameterPoint rp{0.2, 0.5, -0.7};
  const QgtTensor rs = qgt_sum_over_states(r, rp, 2);
  const QgtTensor pr = qgt_projector(r, rp, 2, 1e-4);
  CHECK(oracle::max_abs(pr.tensor() - rs.tensor()) <= 1e-6 * std::max(1.0, oracle::max_abs(rs.tensor())));
}

TEST_CASE("one-parameter model has a real non-negative 1x1 tensor") {
  const ModelSpec line("line", {"x"},
                       {{HermitianMatrix(oracle::sigma_z()), Expr::parse("cos(x)", {"x"})},
                        {HermitianMatrix(oracle::sigma_x()), Expr::parse("sin(x)", {"x"})}});
  for (Index level : {0, 1}) {
    const QgtTensor s = qgt_sum_over_states(line, {0.4}, level);
    const QgtTensor p = qgt_projector(line, {0.4}, level);
    const QgtTensor f = qgt_overlap_fd(line, {0.4}, level, 1e-3);
    CHECK(s.rank() == 1);
    CHECK(s(0, 0).imag() == 0.0);
    CHECK(p(0, 0).imag() == 0.0);
    CHECK(f(0, 0).imag() == 0.0);
    CHECK(s(0, 0).real() == doctest::Approx(0.25));
    CHECK(p(0, 0).real() == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(f(0, 0).real() == doctest::Approx(0.25).epsilon(1e-5));
  }
}

TEST_CASE("overlap finite differences") {
  const ModelSpec m = spin_half(1.0);
  const ParameterPoint p{kThird, 0.3};
  const QgtTensor q = qgt_overlap_fd(m, p, 1, 1e-3);
  CHECK(oracle::max_abs(q.metric() - oracle::spin_metric(kThird)) < 1e-5);
  CHECK(std::abs(q.curvature()(0, 1) - oracle::spin_curvature_up(kThird)) < 1e-5);

  // rephasing every fetched eigenvector
  const StateProvider base = level_state_provider(m, 1);
  oracle::Rng rng(17);
  const StateProvider scrambled = [&](const ParameterPoint& x) {
    return ComplexVector(oracle::random_phase(rng) * base(x));
  };
  const double h = 1e-3;
  const double curvature_floor = 20 * std::numeric_limits<double>::epsilon() / (h * h);
  const QgtTensor ref = qgt_overlap_fd(base, p, h);
  for (int t = 0; t < 100; ++t) {
    const QgtTensor r = qgt_overlap_fd(scrambled, p, h);
    REQUIRE(oracle::max_abs(r.metric() - ref.metric()) <= 1e-12);
    REQUIRE(oracle::max_abs(r.curvature() - ref.curvature()) <= curvature_floor);
  }
}

TEST_CASE("overlap finite differences refuse a level crossing inside the cell") {
  // eigenvalues +-x cross at x = 0; the level-0 state flips there
  const ModelSpec cross("cross", {"x", "y"},
                        {{HermitianMatrix(oracle::sigma_z()), Expr::parse("x", {"x", "y"})},
                         {HermitianMatrix(oracle::sigma_x()), Expr::parse("1e-9*y", {"x", "y"})}});
  CHECK_THROWS_AS(qgt_overlap_fd(cross, {2e-4, 0.0}, 0, 1e-3), NumericalError);
  CHECK_THROWS_AS(qgt_projector(cross, {2e-4, 0.0}, 0, 1e-3), NumericalError);
}

TEST_CASE("plaquette orientation") {
  // level 1 curvature is negative: a loop theta -> phi encloses negative flux
  const StateProvider s = level_state_provider(spin_half(1.0), 1);
  const double h = 1e-3;
  const ParameterPoint p{kThird, 0.0};
  const double phase = plaquette_phase(s(p), s(p.displaced(0, h)), s(p.displaced(0, h).displaced(1, h)),
                                       s(p.displaced(1, h)));
  CHECK(phase / (h * h) == doctest::Approx(oracle::spin_curvature_up(kThird + h / 2)).epsilon(1e-5));
}

TEST_CASE("Berry connection") {
  const double h = 1e-4;
  // (e^{-i phi/2} cos, e^{i phi/2} sin): beta_phi = cos(theta)/2
  const StateProvider half_angle = [](const ParameterPoint& x) { return oracle::spin_up(x[0], x[1]); };
  for (double th : {0.3, kThird, 2.0}) {
    const BerryConnection b = berry_connection(raw_stencil(half_angle, {th, 0.7}, h));
    CHECK(b.beta[1] == doctest::Approx(0.5 * std::cos(th)).epsilon(1e-8));
    CHECK(std::abs(b.beta[0]) < 1e-10);
  }
  static_assert(BerryConnection::gauge_dependent);

  // gauge transformation psi -> e^{i alpha} psi shifts beta by -d alpha
  const StateProvider shifted = [](const ParameterPoint& x) {
    return ComplexVector(std::exp(Complex(0, 0.4 * x[0] + x[1] * x[1])) * oracle::spin_up(x[0], x[1]));
  };
  const BerryConnection b0 = berry_connection(raw_stencil(half_angle, {1.0, 0.7}, h));
  const BerryConnection b1 = berry_connection(raw_stencil(shifted, {1.0, 0.7}, h));
  CHECK(b1.beta[0] - b0.beta[0] == doctest::Approx(-0.4).epsilon(1e-8));
  CHECK(b1.beta[1] - b0.beta[1] == doctest::Approx(-1.4).epsilon(1e-8));

  // real eigenvectors carry no phase winding
  const ModelSpec real("real", {"x"},
                       {{HermitianMatrix(oracle::sigma_z()), Expr::parse("cos(x)", {"x"})},
                        {HermitianMatrix(oracle::sigma_x()), Expr::parse("sin(x)", {"x"})}});
  const StateProvider rs = level_state_provider(real, 0);
  CHECK(std::abs(berry_connection(aligned_stencil(rs, {0.8}, h)).beta[0]) < 1e-12);

  // the alignment gauge kills beta along every axis
  const StateProvider up = level_state_provider(spin_half(1.0), 1);
  const BerryConnection aligned = berry_connection(aligned_stencil(up, {1.0, 0.7}, h));
  CHECK(oracle::max_abs(aligned.beta) < 1e-8);
}

TEST_CASE("aligned stencil refuses large steps") {
  const StateProvider up = level_state_provider(spin_half(1.0), 1);
  CHECK_THROWS_AS(aligned_stencil(up, {1.0, 0.7}, 2.5), NumericalError);
}

TEST_CASE("non-Abelian tensor") {
  const ModelSpec spin = spin_half(1.0);
  const ModelSpec dbl = doubled(spin);
  oracle::Rng rng(71);
  for (int i = 0; i < 10; ++i) {
    const ParameterPoint p{oracle::uniform(rng, 0.1, 3.0), oracle::uniform(rng, 0, 6)};
    for (Index band : {0, 1}) {
      const QgtTensor ref = qgt_sum_over_states(spin, p, band);
      const std::vector<Index> group{2 * band, 2 * band + 1};
      const NonAbelianQgt na = qgt_nonabelian(dbl, p, group);
      for (Index mu = 0; mu < 2; ++mu)
        for (Index nu = 0; nu < 2; ++nu) {
          const ComplexMatrix expect = ref(mu, nu) * ComplexMatrix::Identity(2, 2);
          REQUIRE(oracle::max_abs(na.block(mu, nu) - expect) < 1e-12);
        }
    }
  }

  // d = 1 reduces to the Abelian value
  const ParameterPoint p{0.9, 0.2};
  const std::vector<Index> single{1};
  const NonAbelianQgt one = qgt_nonabelian(spin, p, single);
  CHECK(oracle::max_abs(one.block(0, 1) - ComplexMatrix::Constant(1, 1, qgt_sum_over_states(spin, p, 1)(0, 1))) < 1e-14);

  const std::vector<Index> partial{0};
  CHECK_THROWS_AS(qgt_nonabelian(dbl, p, partial), InputError);
}

TEST_CASE("non-Abelian blocks conjugate under rotations of the degenerate subspace") {
  oracle::Rng rng(5);
  // planted threefold degeneracy in a 5x5 family
  const Index n = 5;
  const ComplexMatrix u = oracle::random_unitary(rng, n);
  RealVector e(n);
  e << -1.0, 0.5, 0.5, 0.5, 2.0;
  const ComplexMatrix h0 = u * e.cast<Complex>().asDiagonal() * u.adjoint();
  const std::vector<std::string> params{"a", "b"};
  const ModelSpec m("planted", params,
                    {{HermitianMatrix(h0), Expr::parse("1", params)},
                     {HermitianMatrix(oracle::random_hermitian(rng, n)), Expr::parse("a", params)},
                     {HermitianMatrix(oracle::random_hermitian(rng, n)), Expr::parse("b", params)}});
  const ParameterPoint p{0.0, 0.0};
  const EigenSystem es = hermitian_eigensystem(hamiltonian_at(m, p));
  const auto dh = hamiltonian_gradient(m, p);
  const std::vector<Index> group{1, 2, 3};
  REQUIRE(es.groups[static_cast<std::size_t>(es.group_of(1))] == group);
  const NonAbelianQgt ref = qgt_nonabelian(es, dh, group);

  for (int t = 0; t < 20; ++t) {
    const ComplexMatrix w = oracle::random_unitary(rng, 3);
    EigenSystem rot = es;
    rot.vectors.middleCols(1, 3) = es.vectors.middleCols(1, 3) * w;
    const NonAbelianQgt q = qgt_nonabelian(rot, dh, group);
    for (Index mu = 0; mu < 2; ++mu)
      for (Index nu = 0; nu < 2; ++nu) {
        REQUIRE(oracle::max_abs(q.block(mu, nu) - w.adjoint() * ref.block(mu, nu) * w) < 1e-10);
      }
    for (Index mu = 0; mu < 2; ++mu) {
      const auto a = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(ref.block(mu, mu)).eigenvalues();
      const auto b = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(q.block(mu, mu)).eigenvalues();
      REQUIRE(oracle::max_abs(a - b) < 1e-10);
    }
  }
}
