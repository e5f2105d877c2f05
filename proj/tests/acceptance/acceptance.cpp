#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "renewal_ldp/harness.hpp"
#include "renewal_ldp/measures.hpp"
#include "renewal_ldp/numeric.hpp"
#include "renewal_ldp/rate.hpp"
#include "renewal_ldp/simulate.hpp"
#include "renewal_ldp/tilt.hpp"

using namespace rldp;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

CandidatePair with_atom(CandidatePair p, std::size_t x, double a) {
  for (auto& row : p.density) {
    for (double& v : row) v *= 1.0 - a;
  }
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
  if (s == 0.0) v[0] = s = 1.0;
  for (double& x : v) x /= s;
  return v;
}

Outcome rate_zero() {
  double worst = 0.0;
  for (const char* name : {"two_state_exponential", "two_state_pareto"}) {
    const Model m = fixtures::bundled(name);
    worst = std::max(worst, std::abs(rate_I(m, lln_limit(m)).value));
  }
  return {worst <= 1e-8, "max |I(lln)| = " + num(worst)};
}

Outcome lln() {
  const Model m = fixtures::bundled("two_state_exponential");
  const double t = 1e4;
  const Vector nu = stationary(m.kernel);
  const double e = stationary_mean_wait(m);
  const Matrix flow = nu.asDiagonal() * m.kernel.p / e;
  double flow_dev = 0.0;
  std::vector<double> rate_devs;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto traj = simulate(m, t, seed);
    const auto emp = empirical_pair(traj, m.size());
    flow_dev = std::max(flow_dev, (emp.flow - flow).cwiseAbs().maxCoeff());
    rate_devs.push_back(std::abs(static_cast<double>(traj.count) / t - 1.0 / e));
  }
  const double rate_dev = *std::max_element(rate_devs.begin(), rate_devs.end());
  return {flow_dev < 0.02 && rate_dev <= 0.02, "max flow deviation " + num(flow_dev) + ", max |N_t/t - 1/E tau| " +
                                                   num(rate_dev) + " (median " + num(median(rate_devs)) + ")"};
}

Outcome residuals() {
  const char* names[] = {"two_state_exponential", "two_state_pareto", "three_state_mixed", "two_state_exp1",
                         "single_state_exponential"};
  Philox rng(303);
  std::size_t paths = 0, violations = 0;
  for (const char* name : names) {
    const Model m = fixtures::bundled(name);
    for (std::uint64_t s = 0; s < 200; ++s, ++paths) {
      const double t = 10.0 + 90.0 * uniform_open01(rng);
      const auto traj = simulate(m, t, 41, s);
      const auto emp = empirical_pair(traj, m.size());
      // Sums of floating-point terms carry rounding of order eps per term.
      const double slack = 1e-12 * static_cast<double>(traj.count + 1) / t;
      bool ok = emp.total_inverse_tau_mass() <= static_cast<double>(traj.count + 1) / t + slack;
      for (std::size_t x = 0; x < m.size(); ++x) {
        const double excess = emp.out_flow(x) - emp.inverse_tau_mass(x);
        ok = ok && excess >= -slack && excess <= 1.0 / t + slack;
        ok = ok && std::abs(emp.out_flow(x) - emp.in_flow(x)) <= 1.0 / t + slack;
      }
      if (!ok) ++violations;
    }
  }
  return {violations == 0, std::to_string(violations) + " of " + std::to_string(paths) + " paths violate a bound"};
}

Outcome domination() {
  Philox rng(404);
  std::size_t members = 0, dominated = 0, u00 = 0;
  double worst_excess = -kInfinity, worst_ratio = kInfinity;
  for (int k = 0; k < 10; ++k) {
    const Model m = fixtures::bundled(k % 2 == 0 ? "two_state_exponential" : "three_state_mixed");
    const auto grid = QuadGrid::build(m);
    CandidatePair pair = random_regular_pair(m, grid, rng);
    if (k >= 6) pair = with_atom(pair, static_cast<std::size_t>(k) % m.size(), 0.05 * (k - 5));
    const double rate = rate_I(m, pair).value;
    for (int i = 0; i < 50; ++i, ++members) {
      const double v = rate_Ihh(m, pair, random_gamma_member(m, rng));
      worst_excess = std::max(worst_excess, v - rate);
      if (v <= rate + 1e-6) ++dominated;
    }
    if (check_membership(pair).at_least(Membership::U00)) {
      ++u00;
      const double near = rate_Ihh(m, pair, near_optimizer(m, pair));
      worst_ratio = std::min(worst_ratio, rate > 0.0 ? near / rate : 1.0);
    }
  }
  return {dominated == members && worst_ratio >= 0.99,
          std::to_string(dominated) + "/" + std::to_string(members) + " dominated (max excess " + num(worst_excess) +
              "), near-optimizer worst ratio " + num(worst_ratio) + " on " + std::to_string(u00) + " U00 pairs"};
}

Outcome legendre_suite() {
  const double exp_err = std::abs(legendre(WaitLaw(Exponential{1.0}), 2.0) - (1.0 - std::log(2.0)));
  double pareto_max = 0.0;
  const WaitLaw pareto(Pareto{3.0, 1.0});
  for (double m : {1.5, 1.5000001, 1.6, 2.0, 3.0, 10.0, 100.0, 1e4, 1e8}) pareto_max = std::max(pareto_max, legendre(pareto, m));
  const bool xi = mgf_abscissa(WaitLaw(Exponential{2.5})) == 2.5 && mgf_abscissa(WaitLaw(GammaLaw{2.0, 0.5})) == 2.0 &&
                  mgf_abscissa(pareto) == 0.0 && mgf_abscissa(WaitLaw(LogNormal{0.0, 0.5})) == 0.0 &&
                  mgf_abscissa(WaitLaw(Weibull{1.5, 1.0})) == kInfinity &&
                  mgf_abscissa(WaitLaw(Weibull{0.7, 1.0})) == 0.0 && mgf_abscissa(WaitLaw(Weibull{1.0, 2.0})) == 0.5 &&
                  mgf_abscissa(WaitLaw(Deterministic{1.5})) == kInfinity;
  return {exp_err <= 1e-6 && pareto_max <= 1e-6 && xi, "Exp(1) error " + num(exp_err) + ", Pareto max on [1.5,inf) " +
                                                          num(pareto_max) + ", xi " + (xi ? "exact" : "wrong")};
}

Outcome dv_oracle() {
  const Model m = fixtures::two_state();
  Philox rng(606);
  double value_err = 0.0, marginal_err = 0.0, scaling_err = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vector zeta = (Vector(2) << 0.05 + 2.0 * uniform_open01(rng), 0.05 + 2.0 * uniform_open01(rng)).finished();
    const auto dv = donsker_varadhan(m.kernel, zeta);
    value_err = std::max(value_err, std::abs(dv.value - fixtures::dv_two_state_scan(m.kernel.p, zeta(0), zeta(1))));
    marginal_err = std::max({marginal_err, (dv.Q.rowwise().sum() - zeta).cwiseAbs().maxCoeff(),
                             (dv.Q.colwise().sum().transpose() - zeta).cwiseAbs().maxCoeff()});
    scaling_err = std::max(scaling_err, std::abs(donsker_varadhan(m.kernel, 3.0 * zeta).value - 3.0 * dv.value));
  }
  return {value_err <= 1e-6 && marginal_err <= 1e-10 && scaling_err <= 1e-10,
          "value error " + num(value_err) + ", marginal error " + num(marginal_err) + ", scaling error " +
              num(scaling_err)};
}

Outcome contraction() {
  const Model m = fixtures::bundled("two_state_exponential");
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double pa = k / 19.0;
    const Vector pi = (Vector(2) << pa, 1.0 - pa).finished();
    worst = std::max(worst, std::abs(rate_I1(m, pi).value - contraction_grid_oracle(m, pi)));
  }
  const double heavy = rate_I1(fixtures::bundled("two_state_pareto"), (Vector(2) << 1.0, 0.0).finished()).value;
  return {worst <= 1e-3 && heavy < 1e-6, "max |I1 - grid| " + num(worst) + ", heavy-tail I1((1,0)) " + num(heavy)};
}

Outcome tilting() {
  double self_err = 0.0, round_trip = 0.0, lr_err = 0.0;
  Philox rng(808);
  std::size_t paths = 0;
  for (const char* name : {"two_state_exponential", "three_state_mixed"}) {
    const Model m = fixtures::bundled(name);
    const auto self = tilt_from_pair(m, lln_limit(m));
    self_err = std::max(self_err, (self.kernel() - m.kernel.p).cwiseAbs().maxCoeff());
    for (std::size_t x = 0; x < m.size(); ++x) {
      for (double f : self.grid_density(x)) self_err = std::max(self_err, std::abs(f - 1.0));
    }
    const auto grid = QuadGrid::build(m);
    for (int k = 0; k < 5; ++k) {
      const auto pair = random_regular_pair(m, grid, rng);
      const auto tilted = tilt_from_pair(m, pair);
      round_trip = std::max(round_trip, distance(lln_limit(tilted), pair));
      for (std::uint64_t s = 0; s < 10; ++s, ++paths) {
        const auto lr = likelihood_ratio_terms(simulate(tilted, 50.0, 88, s), tilted);
        const double scale = std::max({1.0, std::abs(lr.per_step), std::abs(lr.functional)});
        lr_err = std::max(lr_err, std::abs(lr.per_step - lr.functional) / scale);
      }
    }
  }
  return {self_err <= 1e-10 && round_trip <= 1e-8 && lr_err <= 1e-8,
          "self-tilt error " + num(self_err) + ", round-trip distance " + num(round_trip) + ", LR relative gap " +
              num(lr_err) + " on " + std::to_string(paths) + " paths"};
}

Outcome decay() {
  ExperimentConfig config = load_config(fixtures::data_dir() / "experiments" / "decay.json");
  config.radii = {0.1};
  config.schedule = {200.0};
  config.n = 10000;
  config.crude_t = 50.0;
  const auto result = run_decay(config);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double rate_estimate = nan, rate = nan, is = nan, mc = nan, combined = nan;
  for (const auto& row : result.rows) {
    if (row.kind == "decay.median_rate_estimate") {
      rate_estimate = row.measured;
      rate = row.reference;
    } else if (row.kind == "decay.crude_check") {
      is = row.measured;
      mc = row.reference;
      combined = row.ci;
    }
  }
  const double rel = std::abs(rate_estimate - rate) / rate;
  const bool consistent = std::abs(is - mc) <= 3.0 * combined;
  return {rel <= 0.25 && consistent, "rate estimate " + num(rate_estimate) + " vs I " + num(rate) + " (relative error " +
                                         num(rel) + "); t=50 IS " + num(is) + " vs crude " + num(mc) + ", gap " +
                                         num(std::abs(is - mc) / combined) + " combined CI half-widths"};
}

Outcome entropy() {
  Philox rng(1010);
  std::size_t failures = 0;
  for (int k = 0; k < 1000; ++k) {
    const int n = 2 + k % 5;
    const auto a = random_probabilities(rng, n, true), b = random_probabilities(rng, n, false);
    const auto c = random_probabilities(rng, n, true), d = random_probabilities(rng, n, false);
    const double l = uniform_open01(rng);
    std::vector<double> ac(a.size()), bd(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      ac[i] = l * a[i] + (1.0 - l) * c[i];
      bd[i] = l * b[i] + (1.0 - l) * d[i];
    }
    const bool ok = rel_entropy_discrete(a, b) >= -1e-10 && std::abs(rel_entropy_discrete(b, b)) <= 1e-10 &&
                    rel_entropy_discrete(ac, bd) <=
                        l * rel_entropy_discrete(a, b) + (1.0 - l) * rel_entropy_discrete(c, d) + 1e-10;
    if (!ok) ++failures;
  }
  return {failures == 0, std::to_string(failures) + " of 1000 instances fail"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "rate function vanishes at the LLN pair", 1.0, rate_zero},
      {2, "law of large numbers", 30.0, lln},
      {3, "trajectory constraint residuals", 30.0, residuals},
      {4, "variational domination", 60.0, domination},
      {5, "Legendre transforms", 5.0, legendre_suite},
      {6, "Donsker-Varadhan oracle", 10.0, dv_oracle},
      {7, "contraction oracle", 120.0, contraction},
      {8, "tilting identities", 30.0, tilting},
      {9, "decay rate by importance sampling", 600.0, decay},
      {10, "entropy properties", 5.0, entropy},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      out.pass = false;
      out.detail += "; over the " + num(c.budget_seconds) + " s budget";
    }
    if (!out.pass) ++failed;
    std::printf("criterion %2d %s: %s: %s (%.2f s)\n", c.id, out.pass ? "PASS" : "FAIL", c.name.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
