#include "renewal_ldp/rate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "renewal_ldp/numeric.hpp"
#include "renewal_ldp/parallel.hpp"

namespace rldp {

double PiecewiseLinear::operator()(double tau) const {
  const double t = std::log(tau);
  if (log_knots.size() == 1 || t <= log_knots.front()) return values.front();
  if (t >= log_knots.back()) return values.back();
  const auto it = std::upper_bound(log_knots.begin(), log_knots.end(), t);
  const auto j = static_cast<std::size_t>(it - log_knots.begin());
  const double w = (t - log_knots[j - 1]) / (log_knots[j] - log_knots[j - 1]);
  return (1.0 - w) * values[j - 1] + w * values[j];
}

double PiecewiseLinear::max() const { return *std::max_element(values.begin(), values.end()); }

double PiecewiseLinear::sup_norm() const {
  double s = 0.0;
  for (double v : values) s = std::max(s, std::abs(v));
  return s;
}

double TestPair::exponent(std::size_t x, double tau) const {
  if (std::isinf(tau)) return c[x] > 0.0 ? kInfinity : (c[x] < 0.0 ? -kInfinity : phi[x].values.back());
  return phi[x](tau) + (tau > threshold[x] ? c[x] * tau : 0.0);
}

double TestPair::h(std::size_t x, double tau) const {
  if (std::isinf(tau)) return c[x];
  return exponent(x, tau) / tau;
}

TestPair TestPair::zero(std::size_t n) {
  TestPair t;
  t.phi.assign(n, PiecewiseLinear::constant(0.0));
  t.c.assign(n, 0.0);
  t.threshold.assign(n, 1.0);
  t.H = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  return t;
}

namespace {

// psi mass of [a, b] computed from whichever tail is more accurate.
double law_mass(const WaitLaw& law, double a, double b) {
  if (a >= mean_wait(law)) return survival(law, a) - (std::isinf(b) ? 0.0 : survival(law, b));
  return (std::isinf(b) ? 1.0 : cdf(law, b)) - cdf(law, a);
}

double integrate_segment(const std::function<double(double)>& f, double a, double b) {
  if (std::isinf(b)) {
    thread_local boost::math::quadrature::exp_sinh<double> half_line;
    return half_line.integrate([&](double s) { return f(a + s); }, 1e-12);
  }
  thread_local boost::math::quadrature::tanh_sinh<double> finite;
  return finite.integrate(f, a, b, 1e-12);
}

}  // namespace

double wait_normalizer(const WaitLaw& law, const PiecewiseLinear& phi, double c, double threshold) {
  if (const auto* d = law.as<Deterministic>()) {
    return std::exp(phi(d->value) + (d->value > threshold ? c * d->value : 0.0));
  }
  if (const auto* m = law.as<Mixture>()) {
    double s = 0.0;
    for (std::size_t i = 0; i < m->weights.size(); ++i) {
      s += m->weights[i] * wait_normalizer(m->components[i], phi, c, threshold);
    }
    return s;
  }
  const double xi = mgf_abscissa(law);
  const double lo = support_lower(law);
  if (c > 0.0 && c >= xi) return kInfinity;

  std::vector<double> breaks;
  for (double k : phi.log_knots) {
    const double tau = std::exp(k);
    if (tau > lo) breaks.push_back(tau);
  }
  if (threshold > lo && c != 0.0) breaks.push_back(threshold);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const double first_knot = std::exp(phi.log_knots.front());
  const double last_knot = std::exp(phi.log_knots.back());
  const bool conjugate = c != 0.0 && has_exponential_conjugate(law);
  const double log_mgf_c = c != 0.0 ? log_mgf(law, c) : 0.0;
  std::optional<WaitLaw> tilted;
  if (conjugate) tilted = exponential_tilt(law, c);

  double total = 0.0;
  double a = lo;
  for (std::size_t s = 0; s <= breaks.size(); ++s) {
    const double b = s < breaks.size() ? breaks[s] : kInfinity;
    const bool active = c != 0.0 && a >= threshold;
    const bool flat = phi.log_knots.size() == 1 || b <= first_knot || a >= last_knot;
    if (flat && !active) {
      total += std::exp(phi(flat && b <= first_knot ? first_knot : std::max(a, last_knot))) * law_mass(law, a, b);
    } else if (flat && conjugate) {
      const double level = phi(b <= first_knot ? first_knot : std::max(a, last_knot));
      total += std::exp(level + log_mgf_c) * law_mass(*tilted, a, b);
    } else {
      const double cc = active ? c : 0.0;
      total += integrate_segment(
          [&](double tau) {
            const double p = pdf(law, tau);
            if (!(p > 0.0)) return 0.0;
            const double v = std::exp(phi(tau) + cc * tau + std::log(p));
            return std::isfinite(v) ? v : 0.0;
          },
          a, b);
    }
    a = b;
  }
  return total;
}

std::vector<double> log_wait_normalizers(const Model& model, const TestPair& test) {
  std::vector<double> out(model.size());
  for (std::size_t x = 0; x < model.size(); ++x) {
    out[x] = std::log(wait_normalizer(model.waits[x], test.phi[x], test.c[x], test.threshold[x]));
  }
  return out;
}

std::vector<double> log_kernel_normalizers(const Model& model, const TestPair& test) {
  const std::size_t n = model.size();
  std::vector<double> out(n);
  std::vector<double> terms;
  for (std::size_t x = 0; x < n; ++x) {
    terms.clear();
    for (std::size_t y = 0; y < n; ++y) {
      const double p = model.kernel(x, y);
      if (p > 0.0) terms.push_back(std::log(p) + test.H(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)));
    }
    out[x] = log_sum_exp(terms);
  }
  return out;
}

std::optional<std::string> gamma_violation(const Model& model, const TestPair& test) {
  const std::size_t n = model.size();
  if (test.phi.size() != n || test.c.size() != n || test.threshold.size() != n ||
      test.H.rows() != static_cast<Eigen::Index>(n) || test.H.cols() != static_cast<Eigen::Index>(n)) {
    return "test pair shapes do not match the state space";
  }
  if (!test.H.allFinite()) return "H must be finite";
  for (std::size_t x = 0; x < n; ++x) {
    const auto& phi = test.phi[x];
    if (phi.values.empty() || phi.values.size() != phi.log_knots.size()) return "phi of state " + std::to_string(x) + " is malformed";
    for (double v : phi.values) {
      if (!std::isfinite(v)) return "phi of state " + std::to_string(x) + " is not bounded";
    }
    const double xi = mgf_abscissa(model.waits[x]);
    const double c = test.c[x];
    if (!(c >= 0.0)) return "c_x >= 0 fails at state " + std::to_string(x);
    if (c > xi || (xi > 0.0 && c >= xi)) return "c_x < xi_x fails at state " + std::to_string(x);
  }
  const auto lk = log_kernel_normalizers(model, test);
  for (std::size_t x = 0; x < n; ++x) {
    if (!(lk[x] < 0.0)) return "sum_z p(x,z) e^{H(x,z)} < 1 fails at state " + std::to_string(x);
  }
  const auto lw = log_wait_normalizers(model, test);
  for (std::size_t x = 0; x < n; ++x) {
    if (!(lw[x] < 0.0)) return "psi_x(e^{tau h_x(tau)}) < 1 fails at state " + std::to_string(x);
  }
  return std::nullopt;
}

RateReport rate_I(const Model& model, const CandidatePair& pair, double tol) {
  RateReport report;
  const auto membership = check_membership(pair, tol);
  report.jump_excess = membership.jump_excess;
  report.divergence = membership.divergence;
  if (!membership.at_least(Membership::Lambda0)) {
    report.value = kInfinity;
    report.note = "pair outside Lambda0";
    return report;
  }
  const auto derived = derived_kernels(pair, model, tol);
  const std::size_t n = pair.size();
  report.terms.resize(n);
  double total = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    auto& t = report.terms[x];
    const double z = pair.inverse_tau_mass(x);
    if (!derived.fallback[x] && z > 0.0) {
      const Vector q = derived.kernel.row(static_cast<Eigen::Index>(x)).transpose();
      const Vector p = model.kernel.p.row(static_cast<Eigen::Index>(x)).transpose();
      t.kernel = z * rel_entropy_discrete({q.data(), static_cast<std::size_t>(q.size())},
                                          {p.data(), static_cast<std::size_t>(p.size())});
      t.wait = z * rel_entropy_grid(derived.waits[x], pair.grid->state(x));
    }
    if (pair.atoms[x] > 0.0) t.atom = pair.atoms[x] * mgf_abscissa(model.waits[x]);
    total += t.kernel + t.wait + t.atom;
  }
  report.value = total;
  return report;
}

namespace {

double kernel_part(const Matrix& flow, const Matrix& H, const std::vector<double>& log_kernel_norm) {
  double s = 0.0;
  for (Eigen::Index x = 0; x < flow.rows(); ++x) {
    for (Eigen::Index y = 0; y < flow.cols(); ++y) {
      const double q = flow(x, y);
      if (q > 0.0) s += q * (H(x, y) - log_kernel_norm[static_cast<std::size_t>(x)]);
    }
  }
  return s;
}

void require_gamma(const Model& model, const TestPair& test) {
  if (auto why = gamma_violation(model, test)) throw std::invalid_argument("test pair not in Gamma: " + *why);
}

}  // namespace

double rate_Ihh(const Model& model, const CandidatePair& pair, const TestPair& test) {
  require_gamma(model, test);
  pair.validate();
  if (!pair.grid->matches(model.waits)) throw std::invalid_argument("pair grid does not match the model");
  double value = kernel_part(pair.flow, test.H, log_kernel_normalizers(model, test));
  std::vector<double> logs;
  for (std::size_t x = 0; x < pair.size(); ++x) {
    const auto& g = pair.grid->state(x);
    double integral = 0.0;
    logs.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double e = test.exponent(x, g.nodes[i]);
      integral += g.weights[i] * pair.density[x][i] * e / g.nodes[i];
      logs[i] = std::log(g.weights[i]) + e;
    }
    if (pair.atoms[x] > 0.0) integral += pair.atoms[x] * test.c[x];
    const double out = pair.out_flow(x);
    value += integral - (out > 0.0 ? out * log_sum_exp(logs) : 0.0);
  }
  return value;
}

double empirical_functional(const EmpiricalPair& pair, const TestPair& test, const std::vector<double>& log_kernel_norm,
                            const std::vector<double>& log_wait_norm) {
  double value = kernel_part(pair.flow, test.H, log_kernel_norm);
  for (const auto& a : pair.atoms) value += a.weight * test.h(a.state, a.tau);
  for (std::size_t x = 0; x < pair.size(); ++x) {
    const double out = pair.out_flow(x);
    if (out > 0.0) value -= out * log_wait_norm[x];
  }
  return value;
}

double rate_Ihh(const Model& model, const EmpiricalPair& pair, const TestPair& test) {
  require_gamma(model, test);
  if (pair.size() != model.size()) throw std::invalid_argument("pair and model have different state counts");
  return empirical_functional(pair, test, log_kernel_normalizers(model, test), log_wait_normalizers(model, test));
}

TestPair random_gamma_member(const Model& model, Philox& rng) {
  const std::size_t n = model.size();
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * uniform_open01(rng); };
  TestPair t = TestPair::zero(n);
  for (std::size_t x = 0; x < n; ++x) {
    const WaitLaw& law = model.waits[x];
    auto& phi = t.phi[x];
    phi.log_knots.clear();
    phi.values.clear();
    if (const auto* d = law.as<Deterministic>()) {
      phi.log_knots.push_back(std::log(d->value));
    } else {
      for (int k = 0; k < 6; ++k) phi.log_knots.push_back(std::log(quantile(law, uniform(0.001, 0.999))));
      std::sort(phi.log_knots.begin(), phi.log_knots.end());
      phi.log_knots.erase(std::unique(phi.log_knots.begin(), phi.log_knots.end()), phi.log_knots.end());
    }
    for (std::size_t k = 0; k < phi.log_knots.size(); ++k) phi.values.push_back(uniform(-5.0, 5.0));

    const double xi = mgf_abscissa(law);
    t.c[x] = xi > 0.0 ? uniform(0.0, std::min(0.9 * xi, 10.0)) : 0.0;
    if (const auto* d = law.as<Deterministic>()) {
      t.threshold[x] = d->value * uniform(0.5, 1.5);
    } else {
      t.threshold[x] = quantile(law, uniform(0.5, 0.999));
    }
    double log_norm = std::log(wait_normalizer(law, phi, t.c[x], t.threshold[x]));
    if (!std::isfinite(log_norm)) {
      t.c[x] = 0.0;
      log_norm = std::log(wait_normalizer(law, phi, 0.0, t.threshold[x]));
    }
    const double shift = log_norm + uniform(0.01, 1.0);
    for (double& v : phi.values) v -= shift;
  }
  for (Eigen::Index x = 0; x < t.H.rows(); ++x) {
    for (Eigen::Index y = 0; y < t.H.cols(); ++y) t.H(x, y) = uniform(-2.0, 2.0);
  }
  const auto lk = log_kernel_normalizers(model, t);
  for (Eigen::Index x = 0; x < t.H.rows(); ++x) {
    t.H.row(x).array() -= lk[static_cast<std::size_t>(x)] + uniform(0.01, 1.0);
  }
  return t;
}

TestPair near_optimizer(const Model& model, const CandidatePair& pair, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("near_optimizer needs delta in ]0,1[");
  constexpr double kLogFloor = -50.0;
  const auto derived = derived_kernels(pair, model);
  const std::size_t n = pair.size();
  TestPair t = TestPair::zero(n);
  for (std::size_t x = 0; x < n; ++x) {
    const auto& g = pair.grid->state(x);
    auto& phi = t.phi[x];
    if (derived.fallback[x]) {
      phi = PiecewiseLinear::constant(-delta);
    } else {
      phi.log_knots.resize(g.size());
      phi.values.resize(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        phi.log_knots[i] = std::log(g.nodes[i]);
        const double f = derived.waits[x][i];
        phi.values[i] = (1.0 - delta) * std::max(f > 0.0 ? std::log(f) : kLogFloor, kLogFloor) - delta;
      }
    }
    const WaitLaw& law = model.waits[x];
    const double xi = mgf_abscissa(law);
    if (pair.atoms[x] > 0.0 && xi > 0.0 && std::isfinite(xi)) {
      t.c[x] = (1.0 - delta) * xi;
      t.threshold[x] = g.nodes.back();
    }
    // Pin the exact normalizer to e^{-delta}; interpolation between grid
    // nodes and the c-term otherwise move it slightly.
    for (int attempt = 0; attempt < 60; ++attempt) {
      const double log_norm = std::log(wait_normalizer(law, phi, t.c[x], t.threshold[x]));
      if (std::isfinite(log_norm)) {
        for (double& v : phi.values) v -= log_norm + delta;
        if (std::log(wait_normalizer(law, phi, t.c[x], t.threshold[x])) < 0.0) break;
      }
      t.c[x] *= 0.5;
      if (attempt > 50) t.c[x] = 0.0;
    }
  }
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      const double p = model.kernel(x, y);
      if (p <= 0.0) continue;
      const double q = derived.kernel(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
      const double log_ratio = q > 0.0 ? std::max(std::log(q / p), kLogFloor) : kLogFloor;
      t.H(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = (1.0 - delta) * log_ratio - delta;
    }
  }
  return t;
}

double variational_lb(const Model& model, const CandidatePair& pair, int n_samples, std::uint64_t seed, double delta) {
  if (n_samples < 1) throw std::invalid_argument("variational_lb needs at least one sample");
  Philox rng(seed, 0);
  double best = -kInfinity;
  for (int i = 0; i < n_samples; ++i) best = std::max(best, rate_Ihh(model, pair, random_gamma_member(model, rng)));
  if (check_membership(pair).at_least(Membership::Lambda0)) {
    best = std::max(best, rate_Ihh(model, pair, near_optimizer(model, pair, delta)));
  }
  return best;
}

DonskerVaradhan donsker_varadhan(const Kernel& kernel, const Vector& zeta, int max_iterations, double tol) {
  const auto n = static_cast<Eigen::Index>(kernel.size());
  if (zeta.size() != n) throw std::invalid_argument("zeta has the wrong length");
  if (!((zeta.array() >= 0.0).all() && zeta.allFinite()) || !(zeta.sum() > 0.0)) {
    throw std::invalid_argument("zeta must be finite, >= 0 and not identically 0");
  }
  std::vector<Eigen::Index> support;
  for (Eigen::Index x = 0; x < n; ++x) {
    if (zeta(x) > 0.0) support.push_back(x);
  }
  const auto m = static_cast<Eigen::Index>(support.size());
  Matrix p(m, m);
  Vector z(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    z(i) = zeta(support[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m; ++j) p(i, j) = kernel.p(support[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]);
  }
  const double mass = z.sum();
  const Vector zn = z / mass;

  DonskerVaradhan out;
  out.Q = Matrix::Zero(n, n);
  out.u = Vector::Zero(n);
  auto infeasible = [&] {
    out.value = kInfinity;
    out.residual = kInfinity;
    return out;
  };

  Vector u = Vector::Constant(m, 1.0 / static_cast<double>(m));
  Vector pu, w;
  double residual = kInfinity;
  int it = 0;
  for (; it < max_iterations; ++it) {
    pu = p * u;
    if ((pu.array() <= 0.0).any()) return infeasible();
    w = p.transpose() * (zn.array() / pu.array()).matrix();
    residual = (u.array() * w.array() - zn.array()).abs().maxCoeff();
    if (residual <= tol) break;
    if ((w.array() <= 0.0).any()) return infeasible();
    u = (zn.array() / w.array()).matrix();
    u /= u.sum();
    if ((u.array() < 1e-300).any()) return infeasible();
  }
  if (residual > tol) {
    std::ostringstream os;
    os << "Donsker-Varadhan fixed point did not converge after " << max_iterations << " iterations; residual "
       << residual;
    throw NonConvergence(os.str(), residual);
  }
  pu = p * u;
  out.iterations = it;
  out.residual = residual;
  double value = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index x = support[static_cast<std::size_t>(i)];
    value += z(i) * std::log(u(i) / pu(i));
    out.u(x) = u(i);
    for (Eigen::Index j = 0; j < m; ++j) {
      out.Q(x, support[static_cast<std::size_t>(j)]) = z(i) * p(i, j) * u(j) / pu(i);
    }
  }
  out.value = std::max(0.0, value);
  return out;
}

namespace {

void require_simplex(const Vector& pi, std::size_t n) {
  if (pi.size() != static_cast<Eigen::Index>(n)) throw std::invalid_argument("pi has the wrong length");
  if (!((pi.array() >= 0.0).all() && pi.allFinite()) || std::abs(pi.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("pi must be a probability vector");
  }
}

// Minimum of a unimodal (possibly +inf-plateaued) function: coarse scan, then
// golden section between the neighbours of the best scan point.
ScalarMinimum minimize_unimodal(const std::function<double(double)>& f, double lo, double hi, double tol) {
  constexpr int kScan = 40;
  double best_x = lo, best_v = kInfinity;
  int best_k = 0;
  for (int k = 0; k <= kScan; ++k) {
    const double x = lo + (hi - lo) * k / kScan;
    const double v = f(x);
    if (v < best_v) {
      best_v = v;
      best_x = x;
      best_k = k;
    }
  }
  if (!std::isfinite(best_v)) return {best_x, best_v};
  const double a = lo + (hi - lo) * std::max(best_k - 1, 0) / kScan;
  const double b = lo + (hi - lo) * std::min(best_k + 1, kScan) / kScan;
  const auto refined = golden_section_minimize(f, a, b, tol);
  return refined.value < best_v ? refined : ScalarMinimum{best_x, best_v};
}

}  // namespace

double contraction_objective(const Model& model, const Vector& pi, const Vector& zeta) {
  double value = 0.0;
  try {
    value = donsker_varadhan(model.kernel, zeta).value;
  } catch (const NonConvergence&) {
    return kInfinity;
  }
  if (!std::isfinite(value)) return kInfinity;
  for (Eigen::Index x = 0; x < pi.size(); ++x) {
    if (pi(x) <= 0.0) continue;
    const double l = legendre(model.waits[static_cast<std::size_t>(x)], pi(x) / zeta(x));
    if (!std::isfinite(l)) return kInfinity;
    value += zeta(x) * l;
  }
  return value;
}

RateReport rate_I1(const Model& model, const Vector& pi, const I1Options& options) {
  require_valid(model);
  const std::size_t n = model.size();
  require_simplex(pi, n);
  if (options.restarts < 1) throw std::invalid_argument("rate_I1 needs at least one start");

  std::vector<Eigen::Index> active;
  for (Eigen::Index x = 0; x < pi.size(); ++x) {
    if (pi(x) > 0.0) active.push_back(x);
  }
  const double y_lo = std::log(1e-12), y_hi = std::log(1e4);

  auto objective_at = [&](const std::vector<double>& y) {
    Vector zeta = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < active.size(); ++k) zeta(active[k]) = std::exp(y[k]);
    return contraction_objective(model, pi, zeta);
  };

  // Starting points: the law-of-large-numbers scaling, then log-uniform draws.
  std::vector<std::vector<double>> starts(static_cast<std::size_t>(options.restarts));
  Philox rng(options.seed, 0);
  for (std::size_t r = 0; r < starts.size(); ++r) {
    for (Eigen::Index x : active) {
      const double mean = std::min(mean_wait(model.waits[static_cast<std::size_t>(x)]), 1e6);
      const double zeta = r == 0 ? pi(x) / mean : std::exp(std::log(1e-3) + std::log(1e4) * uniform_open01(rng));
      starts[r].push_back(std::clamp(std::log(zeta), y_lo, y_hi));
    }
  }

  struct RunResult {
    std::vector<double> y;
    double value = kInfinity;
    std::vector<TraceEntry> trace;
  };
  std::vector<RunResult> runs(starts.size());
  parallel_for(starts.size(), [&](std::size_t r) {
    std::vector<double> y = starts[r];
    double value = objective_at(y);
    auto& trace = runs[r].trace;
    const std::string stage = "restart " + std::to_string(r);
    trace.push_back({stage, 0, value});
    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
      const double before = value;
      for (std::size_t k = 0; k < y.size(); ++k) {
        auto along = [&](double v) {
          std::vector<double> trial = y;
          trial[k] = v;
          return objective_at(trial);
        };
        const auto best = minimize_unimodal(along, y_lo, y_hi, 1e-10);
        if (best.value < value) {
          value = best.value;
          y[k] = best.argmin;
        }
      }
      if (y.size() > 1) {
        // Common rescaling of all zeta_x.
        const double top = y_hi - *std::max_element(y.begin(), y.end());
        const double bottom = y_lo - *std::min_element(y.begin(), y.end());
        auto scaled = [&](double s) {
          std::vector<double> trial = y;
          for (double& v : trial) v += s;
          return objective_at(trial);
        };
        const auto best = minimize_unimodal(scaled, bottom, top, 1e-10);
        if (best.value < value) {
          value = best.value;
          for (double& v : y) v += best.argmin;
        }
      }
      trace.push_back({stage, sweep, value});
      if (std::isfinite(before) && before - value < options.tol) break;
      if (!std::isfinite(value)) break;
    }
    runs[r].y = y;
    runs[r].value = value;
  });

  RateReport report;
  std::size_t best = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].value < runs[best].value) best = r;
    report.trace.insert(report.trace.end(), runs[r].trace.begin(), runs[r].trace.end());
  }
  report.value = runs[best].value;
  report.argmin.assign(n, 0.0);
  for (std::size_t k = 0; k < active.size(); ++k) report.argmin[static_cast<std::size_t>(active[k])] = std::exp(runs[best].y[k]);
  report.note = "interior minimum";

  // zeta -> 0 along a ray: zeta_x Lambda*_x(pi_x / zeta_x) -> pi_x xi_x.
  double origin = 0.0;
  for (Eigen::Index x : active) {
    const double xi = mgf_abscissa(model.waits[static_cast<std::size_t>(x)]);
    origin += xi > 0.0 ? pi(x) * xi : 0.0;
  }
  report.trace.push_back({"origin limit", 0, origin});
  if (origin <= report.value) {
    report.value = origin;
    report.argmin.assign(n, 0.0);
    report.note = "limit zeta -> 0";
  }
  return report;
}

}  // namespace rldp
