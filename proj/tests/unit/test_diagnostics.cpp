#include <cmath>
#include <random>

#include <doctest.h>

#include "chemred/diagnostics.hpp"
#include "support.hpp"

using namespace chemred;

TEST_SUITE("diagnostics") {

TEST_CASE("mass, resource gap and error norms") {
  const auto c = testing::standard_coefficients(101);
  CHECK(mass(Vector::Zero(101), c.grid_x) == 0.0);
  CHECK(resource_gap(c.supply, c) == 0.0);
  CHECK(std::abs(mass(testing::standard_initial(c.grid_x), c.grid_x) - 1.0) <= 1e-12);
  CHECK(rel_error_R(c.supply, c.supply) == 0.0);
  CHECK(rel_error_R(1.18 * c.supply, c.supply) == doctest::Approx(0.18).epsilon(1e-12));
  CHECK_THROWS_AS(rel_error_R(c.supply, Vector::Zero(101)), std::invalid_argument);
  CHECK(l1_distance(Vector::Ones(101), Vector::Zero(101), c.grid_x) == doctest::Approx(4.0));
  CHECK_THROWS_AS(l1_distance(Vector::Ones(3), Vector::Zero(101), c.grid_x), std::invalid_argument);
  CHECK_THROWS_AS(mass(Vector::Ones(3), c.grid_x), std::invalid_argument);
}

TEST_CASE("resource gap respects its bound along a chemostat run") {
  const auto c = testing::standard_coefficients(101);
  const auto rk = reduce_kernel(c);
  const double eps = 0.01;
  const Vector R0 = 0.5 * c.supply;
  State init{testing::standard_initial(c.grid_x), R0, 0.0};
  RunSettings rs;
  rs.t_end = 2.0;
  rs.dt = 0.001;
  rs.sample_every = 1;
  const auto traj = run(ModelKind::chemostat, c, rk, ScaleParams{eps, 0.005}, init, rs);
  const double gap0 = resource_gap(R0, c);
  double msup = 0.0;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    msup = std::max(msup, traj.diagnostics[k].mass);
    // Times are in the mutation clock; the bound runs in the reaction clock.
    const double t_react = traj.times[k] / 0.005;
    const double bound = resource_gap_bound(t_react, gap0, R0, c, eps, msup);
    CHECK(*traj.diagnostics[k].resource_gap / eps <= bound + 1e-8);
  }
}

TEST_CASE("Hopf-Cole transform") {
  const Vector n = (Vector(3) << 1.0, std::exp(-2.0), 0.0).finished();
  std::size_t floored = 0;
  const Vector u = hopf_cole(n, 0.5, &floored);
  CHECK(u[0] == 0.0);
  CHECK(u[1] == doctest::Approx(-1.0));
  CHECK(u[2] == doctest::Approx(0.5 * std::log(kDensityFloor)));
  CHECK(floored == 1);
  CHECK_THROWS_AS(hopf_cole(n, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(hopf_cole((Vector(1) << -1.0).finished(), 0.1), std::domain_error);
}

TEST_CASE("Hopf-Cole maximum stays near zero along a mutation run") {
  const auto c = testing::standard_coefficients(201);
  const auto rk = reduce_kernel(c);
  const double mu = 0.005;
  State init{testing::standard_initial(c.grid_x), {}, 0.0};
  RunSettings rs;
  rs.t_end = 4.0;
  rs.dt = 0.001;
  rs.sample_every = 100;
  const auto traj = run(ModelKind::direct, c, rk, ScaleParams{1.0, mu}, init, rs);
  const double band = 5.0 * mu * std::abs(std::log(mu));
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    if (traj.times[k] < 1.0) continue;
    const double top = hopf_cole(traj.states[k].n, mu).maxCoeff();
    CHECK(std::abs(top) <= band);
  }
}

TEST_CASE("peak counting") {
  const auto g = TraitGrid::uniform(-2.0, 2.0, 201);
  const Vector one = initial_condition_gaussian(0.1, 0.05, 1.0, g);
  CHECK(peak_count(one, g, 0.1).count() == 1);
  const Vector x = g.nodes();
  const Vector two = ((-(x.array() - 0.7).square() / (2 * 0.04)).exp() + (-(x.array() + 0.7).square() / (2 * 0.04)).exp()).matrix();
  const auto p = peak_count(two, g, 0.1);
  REQUIRE(p.count() == 2);
  CHECK(p.locations[0] == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(p.locations[1] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(peak_count(1e-200 * two, g, 0.1).indices == p.indices);
  CHECK(peak_count(3.7e5 * two, g, 0.1).indices == p.indices);

  // Plateau counts once at its leftmost node; small bumps fall under the threshold.
  const auto h = TraitGrid::uniform(0.0, 1.0, 7);
  const Vector plateau = (Vector(7) << 0, 1, 2, 2, 2, 1, 0.05).finished();
  const auto pp = peak_count(plateau, h, 0.1);
  REQUIRE(pp.count() == 1);
  CHECK(pp.indices[0] == 2);
  const Vector bump = (Vector(7) << 0, 1, 0, 0.05, 0, 0, 0).finished();
  CHECK(peak_count(bump, h, 0.1).count() == 1);
  CHECK(peak_count(bump, h, 0.01).count() == 2);
  CHECK(peak_count(Vector::Zero(7), h, 0.1).count() == 0);
  CHECK_THROWS_AS(peak_count(bump, h, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(peak_count(bump, h, 1.0), std::invalid_argument);
}

TEST_CASE("competition operator is positive") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = testing::random_coefficients(rng, 25, 30);
    const auto rk = reduce_kernel(c);
    Vector v(25);
    for (auto& e : v) e = nd(rng);
    const double norm_c = rk.matrix().norm();
    CHECK(quadratic_form(rk, v) >= -1e-10 * norm_c * v.squaredNorm());
    CHECK(-quadratic_form(rk, v) <= 1e-10 * norm_c * v.squaredNorm());
  }
}

TEST_CASE("two forms of the direct dissipation agree") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = testing::random_coefficients(rng, 21, 19);
    const auto rk = reduce_kernel(c);
    Vector n(21), nb = Vector::Zero(21);
    for (auto& e : n) e = u(rng);
    nb[3] = u(rng);
    nb[11] = u(rng);
    const auto esd = ESDCandidate::from_density(nb);
    const double a = dissipation_dc(n, esd, rk, c);
    const double b = dissipation_dc_resource_form(n, esd, c);
    CHECK(std::abs(a - b) <= 1e-10 * std::max(std::abs(a), 1e-300));
  }
}

TEST_CASE("direct Lyapunov functional and dissipation at the ESD") {
  const auto c = testing::standard_coefficients(201);
  const auto rk = reduce_kernel(c);
  const auto esd = esd_solve_on_support({80, 120}, c, rk);
  CHECK(std::abs(dissipation_dc(esd.density, esd, rk, c)) <= 1e-9);
  // Perturbations raise S_dc above its value at the ESD.
  Vector n = esd.density;
  n[80] *= 1.1;
  n[120] *= 0.95;
  n[30] = 0.2;
  n.array() += 1e-3;
  CHECK(lyapunov_dc(n, esd, c.grid_x) > lyapunov_dc(esd.density, esd, c.grid_x));
  CHECK(dissipation_dc(n, esd, rk, c) < 0.0);
  Vector bad = n;
  bad[120] = 0.0;
  CHECK_THROWS_WITH_AS(lyapunov_dc(bad, esd, c.grid_x), doctest::Contains("node 120"), std::domain_error);
}

TEST_CASE("chemostat Lyapunov functional") {
  const auto c = testing::standard_coefficients(201);
  const double eps = 0.1;
  const auto esd = esd_find({80, 120}, c, reduce_kernel(c), ModelKind::chemostat, ScaleParams{eps, 0.0}, 1e-10);
  REQUIRE(esd.resource.has_value());
  const Vector& nb = esd.density;
  const Vector& Rb = *esd.resource;
  const auto& wx = c.grid_x.weights();
  const auto& wy = c.grid_y.weights();
  const State at{nb, Rb, 0.0};

  double expect = wx.dot(nb) + wy.dot(Rb) - wy.dot(Rb.cwiseProduct(Rb.array().log().matrix()));
  for (auto s : esd.support) expect -= wx[static_cast<Eigen::Index>(s)] * nb[static_cast<Eigen::Index>(s)] * std::log(nb[static_cast<Eigen::Index>(s)]);
  CHECK(lyapunov_cr(at, esd, c) == doctest::Approx(expect).epsilon(1e-13));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int k = 0; k < 10; ++k) {
    State s = at;
    for (auto i : esd.support) s.n[static_cast<Eigen::Index>(i)] *= u(rng);
    for (auto& r : s.R) r *= u(rng);
    CHECK(lyapunov_cr(s, esd, c) >= lyapunov_cr(at, esd, c));
  }

  // Empty ESD: only the resource log term survives.
  ESDCandidate empty = ESDCandidate::from_density(Vector::Zero(201));
  empty.resource = c.supply;
  const State st{testing::standard_initial(c.grid_x), 0.8 * c.supply, 0.0};
  const double reduced = -wy.dot(c.supply.cwiseProduct(st.R.array().log().matrix())) + wx.dot(st.n) + wy.dot(st.R);
  CHECK(lyapunov_cr(st, empty, c) == doctest::Approx(reduced).epsilon(1e-13));

  State bad = st;
  bad.R[17] = 0.0;
  CHECK_THROWS_WITH_AS(lyapunov_cr(bad, esd, c), doctest::Contains("node 17"), std::domain_error);
  ESDCandidate no_r = esd;
  no_r.resource.reset();
  CHECK_THROWS_AS(lyapunov_cr(at, no_r, c), std::invalid_argument);
}

TEST_CASE("chemostat dissipation") {
  const auto c = testing::standard_coefficients(201);
  const double eps = 0.1;
  const ScaleParams sc{eps, 0.0};
  const auto esd = esd_find({80, 120}, c, reduce_kernel(c), ModelKind::chemostat, sc, 1e-12);
  const Vector& Rb = *esd.resource;

  // R = R_bar, n inside the support: both terms vanish.
  Vector n = Vector::Zero(201);
  for (auto s : esd.support) n[static_cast<Eigen::Index>(s)] = 0.5 * esd.density[static_cast<Eigen::Index>(s)];
  CHECK(std::abs(dissipation_cr(State{n, Rb, 0.0}, esd, c, sc)) <= 1e-9);

  // No consumers, R away from R_bar: strictly negative.
  CHECK(dissipation_cr(State{Vector::Zero(201), 0.5 * Rb, 0.0}, esd, c, sc) < 0.0);
  State zero_r{n, Rb, 0.0};
  zero_r.R[4] = 0.0;
  CHECK_THROWS_WITH_AS(dissipation_cr(zero_r, esd, c, sc), doctest::Contains("node 4"), std::domain_error);
}

TEST_CASE("dS_cr/dt along the flow matches the dissipation") {
  const auto c = testing::standard_coefficients(201);
  const double eps = 0.1;
  const ScaleParams sc{eps, 0.0};
  const auto esd = esd_find({80, 120}, c, reduce_kernel(c), ModelKind::chemostat, sc, 1e-12);
  const Vector x = c.grid_x.nodes();
  State s{(0.5 + (-(x.array() - 0.3).square() / 0.1).exp()).matrix(), c.supply, 0.0};
  ChemostatStepper stepper(c, sc);
  for (int k = 0; k < 500; ++k) stepper.step(s, 1e-3);  // leave the initial layer
  const double dt = 1e-5;
  State fwd = s;
  stepper.step(fwd, dt);
  State mid = fwd;
  stepper.step(fwd, dt);
  const State back = s;
  const double fd = (lyapunov_cr(fwd, esd, c) - lyapunov_cr(back, esd, c)) / (2.0 * dt);
  const double d = dissipation_cr(mid, esd, c, sc);
  CHECK(d < 0.0);
  CHECK(std::abs(fd - d) <= 1e-3 * std::abs(d));
}

TEST_CASE("weighted spectrum of the standard kernel") {
  const auto rk = reduce_kernel(testing::standard_coefficients(101));
  const auto sp = weighted_spectrum(rk);
  CHECK(sp.max > 0.0);
  CHECK(sp.min >= -1e-10 * sp.max);
}

}
