#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

#include "renewal_ldp/json_io.hpp"
#include "renewal_ldp/model.hpp"

namespace fixtures {

inline rldp::Model two_state(double rate_a = 1.0, double rate_b = 2.0) {
  rldp::Model m;
  m.states = rldp::StateSpace({"a", "b"});
  m.kernel.p = (rldp::Matrix(2, 2) << 0.2, 0.8, 0.6, 0.4).finished();
  m.waits = {rldp::WaitLaw(rldp::Exponential{rate_a}), rldp::WaitLaw(rldp::Exponential{rate_b})};
  m.initial = rldp::Vector::Constant(2, 0.5);
  return m;
}

inline rldp::Model single_state() {
  rldp::Model m;
  m.states = rldp::StateSpace({"a"});
  m.kernel.p = rldp::Matrix::Constant(1, 1, 1.0);
  m.waits = {rldp::WaitLaw(rldp::Exponential{1.0})};
  m.initial = rldp::Vector::Constant(1, 1.0);
  return m;
}

#ifdef RLDP_DATA_DIR
inline std::filesystem::path data_dir() { return RLDP_DATA_DIR; }
inline rldp::Model bundled(const std::string& name) { return rldp::load_model(data_dir() / "models" / (name + ".json")); }
#endif

// Closed-form Legendre transform of Exp(rate).
inline double exp_legendre(double rate, double m) { return rate * m - 1.0 - std::log(rate * m); }

// I_DV for two states by a dense scan over the off-diagonal flow q = Q(a,b) = Q(b,a).
inline double dv_two_state_scan(const rldp::Matrix& p, double za, double zb, int points = 2000000) {
  auto term = [](double q, double z, double pxy) {
    if (q <= 0.0) return 0.0;
    if (pxy <= 0.0) return std::numeric_limits<double>::infinity();
    return q * std::log(q / (z * pxy));
  };
  auto value = [&](double q) {
    return term(za - q, za, p(0, 0)) + term(q, za, p(0, 1)) + term(q, zb, p(1, 0)) + term(zb - q, zb, p(1, 1));
  };
  const double hi = std::min(za, zb);
  double best = std::numeric_limits<double>::infinity(), arg = 0.0;
  for (int i = 0; i <= points; ++i) {
    const double q = hi * i / points;
    const double v = value(q);
    if (v < best) {
      best = v;
      arg = q;
    }
  }
  // Polish inside the winning cell; the objective is convex in q.
  double lo = std::max(0.0, arg - hi / points), up = std::min(hi, arg + hi / points);
  for (int i = 0; i < 200; ++i) {
    const double m1 = lo + (up - lo) / 3.0, m2 = up - (up - lo) / 3.0;
    if (value(m1) < value(m2)) {
      up = m2;
    } else {
      lo = m1;
    }
  }
  return std::min(best, value(0.5 * (lo + up)));
}

}  // namespace fixtures
