#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "renewal_ldp/model.hpp"

using namespace rldp;

TEST_CASE("valid two-state model") {
  const Model m = fixtures::two_state();
  CHECK(validate_model(m).ok);
  CHECK_NOTHROW(require_valid(m));
}

TEST_CASE("validation lists every violation") {
  Model m = fixtures::two_state();
  m.kernel.p(0, 0) = 0.1;  // row sums to 0.9
  m.initial(0) = 0.7;      // initial sums to 1.2
  const auto report = validate_model(m);
  CHECK_FALSE(report.ok);
  CHECK(report.violations.size() == 2);
  CHECK_THROWS_AS(require_valid(m), ModelError);
}

TEST_CASE("reducible kernels are rejected") {
  Model m = fixtures::two_state();
  m.kernel.p << 1.0, 0.0, 0.5, 0.5;
  CHECK_FALSE(validate_model(m).ok);
  CHECK_FALSE(is_irreducible(m.kernel.p));
  CHECK_THROWS_AS(stationary(m.kernel), ModelError);
}

TEST_CASE("stationary law of a two-state chain") {
  const Model m = fixtures::two_state();
  // nu_a p_ab = nu_b p_ba: nu = (0.6, 0.8) / 1.4.
  const Vector nu = stationary(m.kernel);
  CHECK(nu(0) == doctest::Approx(3.0 / 7.0).epsilon(1e-14));
  CHECK(nu(1) == doctest::Approx(4.0 / 7.0).epsilon(1e-14));
  CHECK(stationary_mean_wait(m) == doctest::Approx(3.0 / 7.0 + 0.5 * 4.0 / 7.0).epsilon(1e-14));
}

TEST_CASE("stationary law is invariant for a random kernel") {
  Philox rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix p(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) p(i, j) = uniform_open01(rng);
      p.row(i) /= p.row(i).sum();
    }
    const Vector nu = stationary(Kernel{p});
    CHECK((nu.transpose() * p - nu.transpose()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(nu.sum() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("double variables chain") {
  const Model m = fixtures::two_state();
  PairWaits pw;
  pw.emplace(std::pair<std::size_t, std::size_t>{0, 0}, WaitLaw(Exponential{1.0}));
  pw.emplace(std::pair<std::size_t, std::size_t>{0, 1}, WaitLaw(Exponential{2.0}));
  pw.emplace(std::pair<std::size_t, std::size_t>{1, 0}, WaitLaw(Exponential{3.0}));
  pw.emplace(std::pair<std::size_t, std::size_t>{1, 1}, WaitLaw(Exponential{4.0}));
  const Model d = double_variables(m.states, m.kernel, pw, m.initial);
  CHECK(d.size() == 4);
  CHECK(validate_model(d).ok);
  CHECK(d.states.label(1) == "a>b");
  // (a,b) moves to (b,a) with p_ba and to (b,b) with p_bb.
  CHECK(d.kernel(1, 2) == doctest::Approx(0.6));
  CHECK(d.kernel(1, 3) == doctest::Approx(0.4));
  CHECK(d.kernel(1, 0) == 0.0);
  CHECK(d.initial(1) == doctest::Approx(0.5 * 0.8));
  pw.erase({1, 1});
  CHECK_THROWS_AS(double_variables(m.states, m.kernel, pw, m.initial), ModelError);
}

TEST_CASE("state space rejects duplicates") {
  CHECK_THROWS(StateSpace({"a", "a"}));
  const StateSpace s({"x", "y"});
  CHECK(s.index_of("y") == 1);
  CHECK_FALSE(s.index_of("z").has_value());
}
