#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "chemred/traitgrid.hpp"

using namespace chemred;

TEST_SUITE("traitgrid") {

TEST_CASE("five-point grid on [-2,2] has trapezoid weights") {
  const auto g = TraitGrid::uniform(-2.0, 2.0, 5);
  CHECK(g.size() == 5);
  CHECK(g.spacing() == doctest::Approx(1.0));
  const double nodes[] = {-2, -1, 0, 1, 2};
  const double weights[] = {0.5, 1, 1, 1, 0.5};
  for (int i = 0; i < 5; ++i) {
    CHECK(g.nodes()[i] == doctest::Approx(nodes[i]).epsilon(1e-15));
    CHECK(g.weights()[i] == doctest::Approx(weights[i]).epsilon(1e-15));
  }
}

TEST_CASE("weights sum to the interval length") {
  CHECK(TraitGrid::uniform(0.0, 1.0, 3).weights().sum() == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t n : {3u, 10u, 201u, 1001u}) {
    const auto g = TraitGrid::uniform(-2.0, 3.5, n);
    CHECK(std::abs(g.weights().sum() - 5.5) <= 1e-10 * 5.5);
    for (Eigen::Index i = 1; i < g.nodes().size(); ++i) {
      CHECK(std::abs(g.nodes()[i] - g.nodes()[i - 1] - g.spacing()) <= 1e-12 * g.spacing());
    }
    CHECK(g.nodes()[g.nodes().size() - 1] == 3.5);
  }
}

TEST_CASE("Gaussian integral on 401 points carries the trapezoid error only") {
  const auto g = TraitGrid::uniform(-2.0, 2.0, 401);
  const Vector f = (-g.nodes().array().square() / 0.5).exp().matrix();
  const double exact = std::sqrt(0.5 * M_PI) * std::erf(2.0 / std::sqrt(0.5));
  const double err = integrate(f, g) - exact;
  // Leading Euler-Maclaurin term h^2/12 (f'(b) - f'(a)).
  const double h = g.spacing();
  const double fprime_b = -4.0 * 2.0 * std::exp(-8.0);
  const double predicted = h * h / 12.0 * (2.0 * fprime_b);
  CHECK(std::abs(err / exact) < 4e-8);
  CHECK(std::abs(err - predicted) <= 1e-3 * std::abs(predicted));
}

TEST_CASE("constructor rejects bad input") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(TraitGrid::uniform(0.0, 1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(TraitGrid::uniform(1.0, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(TraitGrid::uniform(2.0, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(TraitGrid::uniform(-inf, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(TraitGrid::uniform(0.0, std::nan(""), 5), std::invalid_argument);
}

TEST_CASE("integrate basics") {
  const auto g = TraitGrid::uniform(-2.0, 2.0, 201);
  CHECK(integrate(Vector::Ones(201), g) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(std::abs(integrate(g.nodes(), g)) <= 1e-12);
  const auto h = TraitGrid::uniform(-1.0, 1.0, 101);
  CHECK(std::abs(integrate(h.nodes().array().square().matrix(), h) - 2.0 / 3.0) <= 1e-3);
  CHECK_THROWS_AS(integrate(Vector::Ones(5), g), std::invalid_argument);
}

TEST_CASE("quadrature is exact for affine functions") {
  const auto g = TraitGrid::uniform(-0.3, 1.7, 57);
  const Vector f = (3.0 * g.nodes().array() - 2.0).matrix();
  const double exact = 1.5 * (1.7 * 1.7 - 0.09) - 2.0 * 2.0;
  CHECK(std::abs(integrate(f, g) - exact) <= 1e-12 * std::abs(exact));
}

TEST_CASE("Laplacian stencil") {
  const auto g = TraitGrid::uniform(-2.0, 2.0, 41);
  const Vector zero = laplacian(Vector::Constant(41, 3.2), g);
  CHECK(zero.cwiseAbs().maxCoeff() <= 1e-12);
  const Vector lq = laplacian(g.nodes().array().square().matrix(), g);
  for (Eigen::Index i = 1; i + 1 < lq.size(); ++i) CHECK(lq[i] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_THROWS_AS(laplacian(Vector::Ones(3), g), std::invalid_argument);
}

TEST_CASE("no-flux Laplacian conserves discrete mass") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (std::size_t n : {3u, 17u, 101u, 400u}) {
    const auto g = TraitGrid::uniform(-1.0, 2.0, n);
    Vector v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = nd(rng);
    CHECK(std::abs(integrate(laplacian(v, g), g)) <= 1e-10);
  }
}

TEST_CASE("Laplacian is symmetric negative semidefinite in the quadrature inner product") {
  for (std::size_t n : {3u, 11u, 101u}) {
    const auto g = TraitGrid::uniform(0.0, 1.0, n);
    const auto N = static_cast<Eigen::Index>(n);
    Matrix L(N, N);
    for (Eigen::Index j = 0; j < N; ++j) L.col(j) = laplacian(Vector::Unit(N, j), g);
    const Matrix WL = g.weights().asDiagonal() * L;
    CHECK((WL - WL.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * WL.cwiseAbs().maxCoeff());
    const Vector r = g.weights().cwiseSqrt();
    const Matrix S = r.asDiagonal() * L * r.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
    CHECK(es.eigenvalues().maxCoeff() <= 1e-10 * es.eigenvalues().cwiseAbs().maxCoeff());
  }
}

TEST_CASE("implicit diffusion solves (I - coef*Lap) u = b and keeps mass") {
  const auto g = TraitGrid::uniform(-2.0, 2.0, 51);
  Vector b = (-(g.nodes().array() - 0.3).square() * 8.0).exp().matrix();
  Vector u = b;
  solve_implicit_diffusion(g, 0.05, u);
  const Vector residual = u - 0.05 * laplacian(u, g) - b;
  CHECK(residual.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(integrate(u, g) == doctest::Approx(integrate(b, g)).epsilon(1e-13));
  CHECK((u.array() > 0.0).all());
}

TEST_CASE("nearest node and single-point grid") {
  const auto g = TraitGrid::uniform(-2.0, 2.0, 5);
  CHECK(g.nearest(-0.8) == 1);
  CHECK(g.nearest(-0.5) == 1);  // tie goes low
  CHECK(g.nearest(10.0) == 4);
  const auto s = TraitGrid::single_point(0.25, 2.0);
  CHECK(s.size() == 1);
  CHECK(integrate(Vector::Constant(1, 3.0), s) == doctest::Approx(6.0));
  CHECK(s.same_as(TraitGrid::single_point(0.25, 2.0)));
  CHECK_FALSE(g.same_as(s));
}

}
