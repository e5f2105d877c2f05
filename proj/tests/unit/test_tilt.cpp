#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "renewal_ldp/measures.hpp"
#include "renewal_ldp/numeric.hpp"
#include "renewal_ldp/rate.hpp"
#include "renewal_ldp/simulate.hpp"
#include "renewal_ldp/tilt.hpp"

using namespace rldp;

namespace {

double ks_exponential(std::vector<double> xs, double rate) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = 1.0 - std::exp(-rate * xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_critical(std::size_t n) { return std::sqrt(-std::log(5e-5) / 2.0) / std::sqrt(static_cast<double>(n)); }

TestPair only_c(std::size_t n, std::size_t x, double c) {
  TestPair t = TestPair::zero(n);
  t.c[x] = c;
  t.threshold[x] = 1e-12;
  return t;
}

Trajectory hand_path() {
  Trajectory traj;
  traj.horizon = 2.5;
  traj.states = {0, 1, 0, 0};
  traj.waits = {1.0, 0.5, 2.0};
  traj.switch_times = {1.0, 1.5, 3.5};
  traj.count = 2;
  return traj;
}

}  // namespace

TEST_CASE("kernel tilt by hand") {
  const Model m = fixtures::two_state();
  TestPair t = TestPair::zero(2);
  t.H(0, 1) = std::log(4.0);
  const auto tilted = tilt_from_hH(m, t);
  CHECK(tilted.kernel()(0, 0) == doctest::Approx(1.0 / 17.0).epsilon(1e-14));
  CHECK(tilted.kernel()(0, 1) == doctest::Approx(16.0 / 17.0).epsilon(1e-14));
  CHECK(tilted.kernel()(1, 0) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(tilted.log_kernel_normalizers()[0] == doctest::Approx(std::log(3.4)).epsilon(1e-14));
}

TEST_CASE("exponential tilt of Exp(1) is Exp(1 - c)") {
  const Model m = fixtures::single_state();
  for (double c : {0.5, -1.0}) {
    const auto tilted = tilt_from_hH(m, only_c(1, 0, c));
    CHECK(tilted.log_wait_normalizers()[0] == doctest::Approx(-std::log(1.0 - c)).epsilon(1e-9));
    Philox rng(31);
    std::vector<double> xs(20000);
    for (double& x : xs) x = tilted.sample_wait(0, rng);
    CHECK(ks_exponential(xs, 1.0 - c) < ks_critical(xs.size()));
    // The tilted mean is computed on the base quadrature grid.
    CHECK(tilted.stationary_mean_wait() == doctest::Approx(1.0 / (1.0 - c)).epsilon(1e-4));
  }
  CHECK_THROWS_AS(tilt_from_hH(m, only_c(1, 0, 1.0)), std::domain_error);
}

TEST_CASE("rejection sampler for a piecewise tilt") {
  const Model m = fixtures::single_state();
  TestPair t = TestPair::zero(1);
  t.phi[0] = PiecewiseLinear{{std::log(0.5), std::log(2.0)}, {0.8, -0.5}};
  const auto tilted = tilt_from_hH(m, t);
  CHECK(tilted.waits()[0].acceptance >= kMinAcceptance);
  // Reference CDF of e^{phi} Exp(1) / Z by a midpoint rule.
  const double z = std::exp(tilted.log_wait_normalizers()[0]);
  auto cdf = [&](double x) {
    const int n = 20000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double tau = x * (i + 0.5) / n;
      s += std::exp(t.phi[0](tau) - tau) * (x / n);
    }
    return s / z;
  };
  Philox rng(2);
  std::vector<double> xs(5000);
  for (double& x : xs) x = tilted.sample_wait(0, rng);
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); i += 5) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1.0) / xs.size() - f, f - static_cast<double>(i) / xs.size()});
  }
  CHECK(d < ks_critical(xs.size()));
}

TEST_CASE("self tilt reproduces the model") {
  const Model m = fixtures::bundled("three_state_mixed");
  const auto self = tilt_from_pair(m, lln_limit(m));
  CHECK((self.kernel() - m.kernel.p).cwiseAbs().maxCoeff() <= 1e-10);
  for (std::size_t x = 0; x < m.size(); ++x) {
    for (double f : self.grid_density(x)) CHECK(std::abs(f - 1.0) <= 1e-10);
  }
}

TEST_CASE("flat-kernel target gives the flat kernel") {
  const Model m = fixtures::two_state();
  Model flat = m;
  flat.kernel.p = Matrix::Constant(2, 2, 0.5);
  const auto target = lln_limit(flat, QuadGrid::build(m));
  const auto tilted = tilt_from_pair(m, target);
  CHECK((tilted.kernel() - flat.kernel.p).cwiseAbs().maxCoeff() <= 1e-12);
  // Stationary law of q^H is Z_x / Z with Z_x = mu(x, 1/tau), and the mean wait is 1 / Z.
  const Vector nu = tilted.stationary();
  const double z = target.inverse_tau_mass(0) + target.inverse_tau_mass(1);
  CHECK(std::abs(nu(0) - target.inverse_tau_mass(0) / z) < 1e-10);
  CHECK(std::abs(tilted.stationary_mean_wait() - 1.0 / z) < 1e-10);
  CHECK(distance(lln_limit(tilted), target) < 1e-8);
}

TEST_CASE("tilting requires a regular pair") {
  const Model m = fixtures::two_state();
  auto atom = lln_limit(m);
  for (auto& row : atom.density) {
    for (double& v : row) v *= 0.9;
  }
  atom.atoms[0] = 0.1;
  atom.flow *= 0.9;
  CHECK_THROWS(tilt_from_pair(m, atom));
  CHECK_NOTHROW(tilt_from_pair(m, regularize(atom, 0.5, m)));
}

TEST_CASE("likelihood ratio by hand") {
  const Model m = fixtures::two_state();
  TestPair t = TestPair::zero(2);
  t.phi[0] = PiecewiseLinear::constant(-0.2);
  t.phi[1] = PiecewiseLinear::constant(0.3);
  t.H << 0.5, -0.2, 0.1, 0.4;
  const auto tilted = tilt_from_hH(m, t);
  const auto traj = hand_path();
  const double lk0 = std::log(0.2 * std::exp(0.5) + 0.8 * std::exp(-0.2));
  const double lk1 = std::log(0.6 * std::exp(0.1) + 0.4 * std::exp(0.4));
  // Steps a->b, b->a, a->a; waits tilted by e^{phi_x} / e^{phi_x} = 1.
  const double ref = (-0.2 - lk0) + (0.1 - lk1) + (0.5 - lk0);
  const auto lr = likelihood_ratio_terms(traj, tilted);
  CHECK(lr.per_step == doctest::Approx(ref).epsilon(1e-13));
  CHECK(lr.functional == doctest::Approx(ref).epsilon(1e-12));
  CHECK(log_likelihood_ratio(traj, m, tilted) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(log_likelihood_ratio_prefix(traj, tilted, 1) == doctest::Approx(-0.2 - lk0).epsilon(1e-13));
}

TEST_CASE("likelihood ratio routes agree on random paths") {
  const Model m = fixtures::bundled("two_state_exponential");
  Philox rng(4);
  const auto grid = QuadGrid::build(m);
  for (int k = 0; k < 5; ++k) {
    const auto t = random_gamma_member(m, rng);
    const auto tilted = tilt_from_hH(m, t);
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto traj = simulate(tilted, 40.0, 12, s);
      const auto lr = likelihood_ratio_terms(traj, tilted);
      const double scale = std::max({1.0, std::abs(lr.per_step), std::abs(lr.functional)});
      CHECK(std::abs(lr.per_step - lr.functional) / scale <= 1e-8);
    }
  }
}

TEST_CASE("importance sampling of a Poisson tail") {
  // Single Exp(1) state: counts(0,0) = N_t + 1, so the event is N_t >= 20 at t = 10.
  const Model m = fixtures::single_state();
  const double t = 10.0;
  const Event event = [](const EmpiricalPair& p) { return p.counts(0, 0) >= 21.0; };
  double exact = 0.0, term = std::exp(-t);
  for (int k = 0; k < 20; ++k) {
    exact += term;
    term *= t / (k + 1);
  }
  exact = 1.0 - exact;
  const auto tilted = tilt_from_hH(m, only_c(1, 0, -1.0));
  const auto est = estimate_probability(m, tilted, event, t, 20000, 5);
  CHECK(std::abs(est.estimate - exact) <= 3.0 * est.ci);
  CHECK(est.relative_ci < 0.1);
  CHECK(est.rate_estimate == doctest::Approx(-std::log(est.estimate) / t));
  // The untilted law gives plain Monte Carlo with the same target.
  const auto identity = tilt_from_hH(m, TestPair::zero(1));
  const auto mc = estimate_probability(m, identity, event, t, 200000, 6);
  CHECK(std::abs(mc.estimate - exact) <= 3.0 * mc.ci);
}

TEST_CASE("estimates do not depend on the worker count") {
  const Model m = fixtures::two_state();
  const auto tilted = tilt_from_hH(m, TestPair::zero(2));
  const Event event = [](const EmpiricalPair& p) { return p.state_mass(0) > 0.6; };
  ISOptions one, many;
  one.workers = 1;
  many.workers = 4;
  const auto a = estimate_probability(m, tilted, event, 20.0, 2000, 3, one);
  const auto b = estimate_probability(m, tilted, event, 20.0, 2000, 3, many);
  CHECK(a.estimate == b.estimate);
  CHECK(a.ci == b.ci);
}

TEST_CASE("hybrid tilting keeps the estimator unbiased") {
  const Model m = fixtures::single_state();
  const double t = 10.0;
  const Event event = [](const EmpiricalPair& p) { return p.counts(0, 0) >= 21.0; };
  double exact = 0.0, term = std::exp(-t);
  for (int k = 0; k < 20; ++k) {
    exact += term;
    term *= t / (k + 1);
  }
  exact = 1.0 - exact;
  ISOptions hybrid;
  hybrid.hybrid_delta = 0.1;
  const auto est = estimate_probability(m, tilt_from_hH(m, only_c(1, 0, -1.0)), event, t, 20000, 7, hybrid);
  CHECK(std::abs(est.estimate - exact) <= 3.0 * est.ci);
  const auto traj = simulate_hybrid(tilt_from_hH(m, only_c(1, 0, -1.0)), t, 5, 1);
  CHECK(traj.count + 1 >= 5);
}
