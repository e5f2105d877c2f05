#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "renewal_ldp/measures.hpp"
#include "renewal_ldp/numeric.hpp"
#include "renewal_ldp/simulate.hpp"

using namespace rldp;

namespace {

CandidatePair with_atom(const CandidatePair& base, std::size_t x, double a) {
  CandidatePair p = base;
  for (auto& row : p.density) {
    for (double& v : row) v *= 1.0 - a;
  }
  for (double& v : p.atoms) v *= 1.0 - a;
  p.atoms[x] += a;
  p.flow *= 1.0 - a;
  return p;
}

std::vector<double> random_probabilities(Philox& rng, int n, bool allow_zero) {
  std::vector<double> v(static_cast<std::size_t>(n));
  double s = 0.0;
  for (double& x : v) {
    x = uniform_open01(rng);
    if (allow_zero && x < 0.2) x = 0.0;
    s += x;
  }
  if (s == 0.0) {
    v[0] = s = 1.0;
  }
  for (double& x : v) x /= s;
  return v;
}

}  // namespace

TEST_CASE("discrete relative entropy by hand") {
  const std::vector<double> nu{0.5, 0.5}, mu{0.8, 0.2};
  CHECK(rel_entropy_discrete(nu, mu) == doctest::Approx(0.223143551314209755).epsilon(1e-14));
  const std::vector<double> zero_nu{1.0, 0.0};
  CHECK(rel_entropy_discrete(zero_nu, mu) == doctest::Approx(std::log(1.25)));
  const std::vector<double> null_mu{1.0, 0.0};
  CHECK(std::isinf(rel_entropy_discrete(nu, null_mu)));
}

TEST_CASE("entropy properties on random instances") {
  Philox rng(12);
  for (int k = 0; k < 1000; ++k) {
    const int n = 2 + k % 5;
    const auto a = random_probabilities(rng, n, true), b = random_probabilities(rng, n, false);
    const auto c = random_probabilities(rng, n, true), d = random_probabilities(rng, n, false);
    CHECK(rel_entropy_discrete(a, b) >= -1e-10);
    CHECK(std::abs(rel_entropy_discrete(b, b)) <= 1e-10);
    const double l = uniform_open01(rng);
    std::vector<double> ac(a.size()), bd(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      ac[i] = l * a[i] + (1.0 - l) * c[i];
      bd[i] = l * b[i] + (1.0 - l) * d[i];
    }
    CHECK(rel_entropy_discrete(ac, bd) <= l * rel_entropy_discrete(a, b) + (1.0 - l) * rel_entropy_discrete(c, d) + 1e-10);
  }
}

TEST_CASE("grid relative entropy of an exponential tilt") {
  // psi' = Exp(2) against psi = Exp(1): density 2 e^{-tau}, entropy log 2 - 1/2.
  const auto grid = build_state_grid(WaitLaw(Exponential{1.0}), kDefaultGridNodes, kDefaultGridTail);
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f[i] = 2.0 * std::exp(-grid.nodes[i]);
  CHECK(rel_entropy_grid(f, grid) == doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-8));
  std::vector<double> one(grid.size(), 1.0);
  CHECK(rel_entropy_grid(one, grid) == 0.0);
}

TEST_CASE("grid integrates moments") {
  for (const WaitLaw& law : {WaitLaw(Exponential{1.0}), WaitLaw(GammaLaw{2.0, 0.5}), WaitLaw(Pareto{1.5, 1.0}),
                             WaitLaw(LogNormal{0.0, 0.5}), WaitLaw(Weibull{1.5, 1.0})}) {
    const auto g = build_state_grid(law, kDefaultGridNodes, kDefaultGridTail);
    double w = 0.0, m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      w += g.weights[i];
      m += g.weights[i] * g.nodes[i];
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m == doctest::Approx(mean_wait(law)).epsilon(1e-9));
  }
}

TEST_CASE("membership classes") {
  const Model m = fixtures::two_state();
  const auto lln = lln_limit(m);
  CHECK(check_membership(lln).level == Membership::U00);

  const auto atom = with_atom(lln, 0, 0.1);
  const auto r = check_membership(atom);
  CHECK(r.level == Membership::Lambda0);
  CHECK_FALSE(r.notes.empty());

  auto extra = lln;
  extra.flow *= 1.01;  // more jumps than mu(x, 1/tau)
  CHECK(check_membership(extra).level == Membership::U);

  auto skew = lln;
  skew.flow(0, 1) += 0.01;
  skew.flow(0, 0) -= 0.01;
  skew.flow(1, 1) += 0.01;
  skew.flow(1, 0) -= 0.01;
  CHECK(check_membership(skew).level == Membership::Ambient);
}

TEST_CASE("derived kernels of the lln pair are the model") {
  const Model m = fixtures::two_state();
  const auto d = derived_kernels(lln_limit(m), m);
  CHECK((d.kernel - m.kernel.p).cwiseAbs().maxCoeff() < 1e-12);
  for (const auto& row : d.waits) {
    for (double v : row) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  }
  auto extra = lln_limit(m);
  extra.flow *= 1.01;
  CHECK_THROWS_AS(derived_kernels(extra, m), std::domain_error);
}

TEST_CASE("distance is a metric on sample pairs") {
  const Model m = fixtures::two_state();
  const auto lln = lln_limit(m);
  const auto a = with_atom(lln, 0, 0.1), b = with_atom(lln, 1, 0.2);
  CHECK(distance(lln, lln) == 0.0);
  CHECK(distance(a, b) == doctest::Approx(distance(b, a)).epsilon(1e-14));
  CHECK(distance(a, b) <= distance(a, lln) + distance(lln, b) + 1e-14);
  CHECK(distance(a, lln) > 0.0);
  const auto e1 = empirical_pair(simulate(m, 500.0, 1), 2), e2 = empirical_pair(simulate(m, 500.0, 2), 2);
  CHECK(distance(e1, e1) == 0.0);
  CHECK(distance(e1, e2) == doctest::Approx(distance(e2, e1)).epsilon(1e-14));
  CHECK(distance(e1, e2) <= distance(e1, lln) + distance(lln, e2) + 1e-12);
  const DistanceReference ref(lln);
  CHECK(ref(e1) == doctest::Approx(distance(e1, lln)).epsilon(1e-14));
}

TEST_CASE("distance shrinks along the law of large numbers") {
  const Model m = fixtures::two_state();
  const auto lln = lln_limit(m);
  std::vector<double> medians;
  for (double t : {100.0, 10000.0}) {
    std::vector<double> d;
    for (std::uint64_t s = 0; s < 10; ++s) d.push_back(distance(empirical_pair(simulate(m, t, 5, s), 2), lln));
    medians.push_back(median(d));
  }
  CHECK(medians[1] < medians[0]);
}

TEST_CASE("projection to the grid keeps masses and flow") {
  const Model m = fixtures::two_state();
  const auto grid = QuadGrid::build(m);
  const auto emp = empirical_pair(simulate(m, 200.0, 8), 2);
  const auto cand = to_candidate(emp, grid, 0.1);
  CHECK_NOTHROW(cand.validate());
  for (std::size_t x = 0; x < 2; ++x) CHECK(cand.state_mass(x) == doctest::Approx(emp.state_mass(x)).epsilon(1e-9));
  CHECK((cand.flow - emp.flow).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("regularization reaches U00 and recovers the input as eps -> 1") {
  const Model m = fixtures::two_state();
  const auto atom = with_atom(lln_limit(m), 0, 0.1);
  double previous = kInfinity;
  std::vector<double> ref_mass, ref_inverse;
  for (double eps : {0.5, 0.9, 0.99}) {
    const auto r = regularize(atom, eps, m);
    CHECK(check_membership(r).level == Membership::U00);
    // Moving the atom keeps mu(x, ]0,+inf]) and mu(x, 1/tau) of the mixture,
    // so both are affine in eps with the same reference part.
    ref_mass.push_back((r.state_mass(0) - eps * atom.state_mass(0)) / (1.0 - eps));
    ref_inverse.push_back((r.inverse_tau_mass(0) - eps * atom.inverse_tau_mass(0)) / (1.0 - eps));
    const double d = distance(r, atom);
    CHECK(d < previous);
    previous = d;
  }
  for (std::size_t i = 1; i < ref_mass.size(); ++i) {
    CHECK(ref_mass[i] == doctest::Approx(ref_mass[0]).epsilon(1e-9));
    CHECK(ref_inverse[i] == doctest::Approx(ref_inverse[0]).epsilon(1e-9));
  }
  const auto same = regularize(atom, 1.0, m);
  CHECK(distance(same, atom) == 0.0);
  CHECK_THROWS_AS(regularize(atom, 0.0, m), std::invalid_argument);
}

TEST_CASE("regularization fills an empty flow row") {
  const Model m = fixtures::two_state();
  const auto grid = QuadGrid::build(m);
  // All finite mass on b, with b looping on itself; a only holds mass at +inf.
  CandidatePair p;
  p.grid = grid;
  p.atoms = {0.3, 0.0};
  p.density.resize(2);
  p.density[0].assign(grid->state(0).size(), 0.0);
  const auto& g = grid->state(1);
  double mean = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) mean += g.weights[i] * g.nodes[i];
  for (double tau : g.nodes) p.density[1].push_back(0.7 * tau / mean);
  p.flow = Matrix::Zero(2, 2);
  p.flow(1, 1) = 0.7 / mean;
  REQUIRE(check_membership(p).level == Membership::Lambda0);
  const auto r = regularize(p, 0.5, m);
  CHECK(r.flow(0, 0) > 0.0);
  CHECK(r.flow(0, 1) > 0.0);
  CHECK(check_membership(r).level == Membership::U00);
}
