#include "renewal_ldp/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "renewal_ldp/measures.hpp"
#include "renewal_ldp/numeric.hpp"
#include "renewal_ldp/parallel.hpp"

namespace rldp {

Vector TiltedModel::stationary() const { return rldp::stationary(Kernel{kernel_}); }

std::vector<double> TiltedModel::grid_density(std::size_t x) const {
  const auto& g = grid_->state(x);
  std::vector<double> logs(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) logs[i] = waits_[x].exponent(g.nodes[i]);
  std::vector<double> weighted(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) weighted[i] = std::log(g.weights[i]) + logs[i];
  const double norm = log_sum_exp(weighted);
  for (double& v : logs) v = std::exp(v - norm);
  return logs;
}

double TiltedModel::stationary_mean_wait() const {
  const Vector nu = stationary();
  double e = 0.0;
  for (std::size_t x = 0; x < waits_.size(); ++x) {
    const auto& g = grid_->state(x);
    const auto f = grid_density(x);
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) m += g.weights[i] * f[i] * g.nodes[i];
    e += nu(static_cast<Eigen::Index>(x)) * m;
  }
  return e;
}

void TiltedModel::set_initial(const Vector& initial) {
  if (initial.size() != initial_.size() || !((initial.array() >= 0.0).all()) || std::abs(initial.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("initial law must be a probability vector over the states");
  }
  initial_ = initial;
}

namespace {

// Draw from psi restricted to [a, b], inverting whichever tail keeps precision.
double sample_segment(const WaitLaw& law, double a, double b, Philox& rng) {
  const double u = uniform_open01(rng);
  double tau;
  if (cdf(law, a) >= 0.5) {
    const double sa = survival(law, a), sb = std::isfinite(b) ? survival(law, b) : 0.0;
    const double s = sb + u * (sa - sb);
    tau = s > 0.0 && s < 1.0 ? inverse_survival(law, s) : a;
  } else {
    const double fa = cdf(law, a), fb = std::isfinite(b) ? cdf(law, b) : 1.0;
    const double f = fa + u * (fb - fa);
    tau = f > 0.0 && f < 1.0 ? quantile(law, f) : a;
  }
  return std::clamp(tau, a, b);
}

double segment_mass(const WaitLaw& law, double a, double b) {
  if (cdf(law, a) >= 0.5) return survival(law, a) - (std::isfinite(b) ? survival(law, b) : 0.0);
  return (std::isfinite(b) ? cdf(law, b) : 1.0) - cdf(law, a);
}

void build_strata(WaitTilt& w, const WaitLaw& law) {
  const double lo = support_lower(law), hi = support_upper(law);
  std::vector<double> edges{lo};
  for (double k : w.phi.log_knots) {
    const double tau = std::exp(k);
    if (tau > lo && tau < hi) edges.push_back(tau);
  }
  if (w.c != 0.0 && w.threshold > lo && w.threshold < hi) edges.push_back(w.threshold);
  edges.push_back(hi);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::vector<double> logs;
  std::vector<double> envelope;
  std::vector<double> kept{edges.front()};
  for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
    const double a = edges[j], b = edges[j + 1];
    const double mass = segment_mass(law, a, b);
    double env = std::max(w.phi(std::max(a, 1e-300)), std::isfinite(b) ? w.phi(b) : w.phi(a * 2.0 + 1.0));
    if (w.c < 0.0 && a >= w.threshold) env += w.c * a;
    if (mass > 0.0) {
      logs.push_back(env + std::log(mass));
      envelope.push_back(env);
      kept.push_back(b);
    } else {
      kept.back() = b;
    }
  }
  const double total = log_sum_exp(logs);
  w.edges = std::move(kept);
  w.segment_envelope = std::move(envelope);
  w.cumulative.resize(logs.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < logs.size(); ++j) {
    acc += std::exp(logs[j] - total);
    w.cumulative[j] = acc;
  }
  w.cumulative.back() = 1.0;
  w.acceptance = std::exp(w.log_normalizer - total);
}

}  // namespace

double TiltedModel::sample_wait(std::size_t x, Philox& rng) const {
  const WaitTilt& w = waits_[x];
  const WaitLaw& law = base_.waits[x];
  for (long attempt = 0; attempt < 100000000L; ++attempt) {
    double tau, log_ratio;
    if (!w.cumulative.empty()) {
      const double u = uniform_open01(rng);
      const auto j = static_cast<std::size_t>(
          std::lower_bound(w.cumulative.begin(), w.cumulative.end(), u) - w.cumulative.begin());
      tau = sample_segment(law, w.edges[j], w.edges[j + 1], rng);
      log_ratio = w.exponent(tau) - w.segment_envelope[j];
    } else {
      tau = w.proposal ? sample(*w.proposal, rng) : sample(law, rng);
      log_ratio = w.proposal ? w.phi(tau) - (tau > w.threshold ? 0.0 : w.c * tau) - w.log_envelope
                             : w.exponent(tau) - w.log_envelope;
    }
    if (log_ratio >= 0.0 || std::log(uniform_open01(rng)) < log_ratio) return tau;
  }
  throw std::runtime_error("rejection sampler for state " + base_.states.label(x) + " made no progress");
}

TiltedModel tilt_from_hH(const Model& model, const TestPair& test) {
  require_valid(model);
  const std::size_t n = model.size();
  if (test.phi.size() != n || test.c.size() != n || test.threshold.size() != n ||
      test.H.rows() != static_cast<Eigen::Index>(n) || test.H.cols() != static_cast<Eigen::Index>(n)) {
    throw std::invalid_argument("test pair shapes do not match the state space");
  }
  TiltedModel t;
  t.base_ = model;
  t.test_ = test;
  t.H_ = test.H;
  t.initial_ = model.initial;
  t.grid_ = QuadGrid::build(model);
  t.log_kernel_norm_ = log_kernel_normalizers(model, test);
  t.kernel_ = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    if (!std::isfinite(t.log_kernel_norm_[x])) {
      throw std::domain_error("kernel normalizer of state " + model.states.label(x) + " is not finite");
    }
    for (std::size_t y = 0; y < n; ++y) {
      const double p = model.kernel(x, y);
      const auto xi = static_cast<Eigen::Index>(x), yi = static_cast<Eigen::Index>(y);
      if (p > 0.0) t.kernel_(xi, yi) = p * std::exp(test.H(xi, yi) - t.log_kernel_norm_[x]);
    }
    t.kernel_.row(static_cast<Eigen::Index>(x)) /= t.kernel_.row(static_cast<Eigen::Index>(x)).sum();
  }

  t.log_wait_norm_ = log_wait_normalizers(model, test);
  t.waits_.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    WaitTilt& w = t.waits_[x];
    const WaitLaw& law = model.waits[x];
    w.phi = test.phi[x];
    w.c = test.c[x];
    w.threshold = test.threshold[x];
    w.log_normalizer = t.log_wait_norm_[x];
    if (!std::isfinite(w.log_normalizer)) {
      throw std::domain_error("tilted waiting law of state " + model.states.label(x) + " has an infinite normalizer");
    }
    const double top = w.phi.max();
    const bool tail_active = w.c != 0.0 && w.threshold < support_upper(law);
    if (has_lebesgue_density(law) && !(tail_active && w.c > 0.0)) {
      build_strata(w, law);
    } else if (tail_active && has_exponential_conjugate(law)) {
      w.proposal = exponential_tilt(law, w.c);
      w.log_envelope = top + std::max(0.0, -w.c) * std::max(w.threshold, 0.0);
      w.acceptance = std::exp(w.log_normalizer - log_mgf(law, w.c) - w.log_envelope);
    } else if (tail_active && w.c > 0.0) {
      throw std::domain_error("no sampler for a growing tilt e^{c tau} of " + law.describe());
    } else {
      w.log_envelope = top;
      w.acceptance = std::exp(w.log_normalizer - top);
    }
    if (!(w.acceptance >= kMinAcceptance)) {
      std::ostringstream os;
      os << "rejection sampler acceptance " << w.acceptance << " below " << kMinAcceptance << " for state "
         << model.states.label(x);
      throw std::domain_error(os.str());
    }
  }
  return t;
}

TiltedModel tilt_from_pair(const Model& model, const CandidatePair& pair, double tol) {
  const auto membership = check_membership(pair, tol);
  if (!membership.at_least(Membership::U00)) {
    std::string why = "tilt_from_pair needs a pair in U00 (got " + to_string(membership.level) + ")";
    for (const auto& note : membership.notes) why += "; " + note;
    throw std::domain_error(why);
  }
  if (!pair.grid->matches(model.waits)) throw std::invalid_argument("pair grid does not match the model");
  const std::size_t n = pair.size();
  TestPair test = TestPair::zero(n);
  std::vector<double> z(n);
  for (std::size_t x = 0; x < n; ++x) {
    z[x] = pair.inverse_tau_mass(x);
    const auto& g = pair.grid->state(x);
    auto& phi = test.phi[x];
    phi.log_knots.resize(g.size());
    phi.values.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      phi.log_knots[i] = std::log(g.nodes[i]);
      phi.values[i] = std::log(std::max(pair.density[x][i], 1e-300) / (z[x] * g.nodes[i]));
    }
  }
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      const auto xi = static_cast<Eigen::Index>(x), yi = static_cast<Eigen::Index>(y);
      const double p = model.kernel(x, y);
      test.H(xi, yi) = p > 0.0 ? std::log(pair.flow(xi, yi) / (z[x] * p)) : 0.0;
    }
  }
  TiltedModel t = tilt_from_hH(model, test);
  t.source_ = pair;
  t.grid_ = pair.grid;
  return t;
}

CandidatePair lln_limit(const TiltedModel& tilted) {
  const Vector nu = tilted.stationary();
  const std::size_t n = tilted.base().size();
  const auto& grid = tilted.grid();
  std::vector<std::vector<double>> f(n);
  double e = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    f[x] = tilted.grid_density(x);
    const auto& g = grid->state(x);
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) m += g.weights[i] * f[x][i] * g.nodes[i];
    e += nu(static_cast<Eigen::Index>(x)) * m;
  }
  CandidatePair pair;
  pair.grid = grid;
  pair.atoms.assign(n, 0.0);
  pair.density.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    const auto& g = grid->state(x);
    const double scale = nu(static_cast<Eigen::Index>(x)) / e;
    pair.density[x].resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) pair.density[x][i] = scale * g.nodes[i] * f[x][i];
  }
  pair.flow = nu.asDiagonal() * tilted.kernel() / e;
  return pair;
}

namespace {

class TiltedLaw {
 public:
  TiltedLaw(const TiltedModel& tilted, std::size_t tilted_steps) : t_(tilted), steps_(tilted_steps) {}

  std::size_t initial_state(Philox& rng) const { return sample_categorical(t_.initial(), rng); }
  std::size_t next_state(std::size_t x, std::size_t step, Philox& rng) const {
    const auto xi = static_cast<Eigen::Index>(x);
    if (step < steps_) return sample_categorical(t_.kernel().row(xi).transpose(), rng);
    return sample_categorical(t_.base().kernel.p.row(xi).transpose(), rng);
  }
  double wait(std::size_t x, std::size_t step, Philox& rng) const {
    return step < steps_ ? t_.sample_wait(x, rng) : sample(t_.base().waits[x], rng);
  }

 private:
  const TiltedModel& t_;
  std::size_t steps_;
};

double initial_log_ratio(const Trajectory& traj, const TiltedModel& tilted) {
  const auto x0 = static_cast<Eigen::Index>(traj.states.front());
  const double a = tilted.initial()(x0), b = tilted.base().initial(x0);
  if (a == b) return 0.0;
  return std::log(a) - std::log(b);
}

double step_log_ratio(const TiltedModel& tilted, std::size_t x, std::size_t y, double tau) {
  const double h = tilted.H()(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  if (h == -kInfinity) return -kInfinity;
  return h - tilted.log_kernel_normalizers()[x] + tilted.waits()[x].exponent(tau) - tilted.log_wait_normalizers()[x];
}

}  // namespace

Trajectory simulate(const TiltedModel& tilted, double t, std::uint64_t seed, std::uint64_t stream) {
  Philox rng = Philox::substream(seed, stream);
  TiltedLaw law(tilted, static_cast<std::size_t>(-1));
  return simulate_process(law, t, rng);
}

Trajectory simulate_hybrid(const TiltedModel& tilted, double t, std::size_t tilted_steps, std::uint64_t seed,
                           std::uint64_t stream) {
  Philox rng = Philox::substream(seed, stream);
  TiltedLaw law(tilted, tilted_steps);
  return simulate_process(law, t, rng);
}

double log_likelihood_ratio_prefix(const Trajectory& traj, const TiltedModel& tilted, std::size_t steps) {
  double s = initial_log_ratio(traj, tilted);
  const std::size_t m = std::min(steps, traj.waits.size());
  for (std::size_t i = 0; i < m; ++i) s += step_log_ratio(tilted, traj.states[i], traj.states[i + 1], traj.waits[i]);
  return s;
}

LikelihoodRatio likelihood_ratio_terms(const Trajectory& traj, const TiltedModel& tilted) {
  LikelihoodRatio lr;
  lr.per_step = log_likelihood_ratio_prefix(traj, tilted, traj.waits.size());
  const double t = traj.horizon;
  const EmpiricalPair emp = empirical_pair(traj, tilted.base().size());
  const std::size_t last = traj.count;
  const double tau = traj.waits[last];
  lr.boundary = (tau - t + traj.last_switch_before_horizon()) * tilted.test().h(traj.states[last], tau);
  lr.functional = t * empirical_functional(emp, tilted.test(), tilted.log_kernel_normalizers(),
                                           tilted.log_wait_normalizers()) +
                  lr.boundary + initial_log_ratio(traj, tilted);
  return lr;
}

double log_likelihood_ratio(const Trajectory& traj, const Model& base, const TiltedModel& tilted) {
  if (base.size() != tilted.base().size()) throw std::invalid_argument("tilted model was built on another state space");
  const auto lr = likelihood_ratio_terms(traj, tilted);
  if (lr.per_step == -kInfinity && lr.functional == -kInfinity) return -kInfinity;
  const double scale = std::max({1.0, std::abs(lr.per_step), std::abs(lr.functional)});
  if (!(std::abs(lr.per_step - lr.functional) <= 1e-8 * scale)) {
    std::ostringstream os;
    os.precision(17);
    os << "likelihood ratio routes disagree: per-step " << lr.per_step << ", functional " << lr.functional;
    throw std::logic_error(os.str());
  }
  return lr.per_step;
}

ISEstimate estimate_probability(const Model& base, const TiltedModel& tilted, const Event& event, double t,
                                std::size_t n, std::uint64_t seed, const ISOptions& options) {
  if (n < 2) throw std::invalid_argument("importance sampling needs at least two paths");
  if (!(t > 0.0)) throw std::invalid_argument("horizon must be > 0");
  if (base.size() != tilted.base().size()) throw std::invalid_argument("tilted model was built on another state space");
  std::size_t steps = static_cast<std::size_t>(-1);
  if (options.hybrid_delta) {
    const double z = 1.0 / tilted.stationary_mean_wait();
    steps = static_cast<std::size_t>(std::floor((1.0 + *options.hybrid_delta) * z * t));
  }
  std::vector<double> weights(n, 0.0);
  std::vector<char> hits(n, 0);
  const std::size_t states = base.size();
  parallel_for(
      n,
      [&](std::size_t i) {
        const Trajectory traj = options.hybrid_delta ? simulate_hybrid(tilted, t, steps, seed, i) : simulate(tilted, t, seed, i);
        if (!event(empirical_pair(traj, states))) return;
        hits[i] = 1;
        weights[i] = std::exp(-log_likelihood_ratio_prefix(traj, tilted, steps));
      },
      options.workers);

  ISEstimate est;
  est.t = t;
  est.n = n;
  double sum = 0.0, hit_count = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += weights[i];
    hit_count += hits[i];
  }
  est.estimate = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double w : weights) ss += (w - est.estimate) * (w - est.estimate);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  est.ci = 1.96 * sd / std::sqrt(static_cast<double>(n));
  est.relative_ci = est.estimate > 0.0 ? est.ci / est.estimate : kInfinity;
  est.rate_estimate = est.estimate > 0.0 ? -std::log(est.estimate) / t : kInfinity;
  est.hit_fraction = hit_count / static_cast<double>(n);
  return est;
}

Event ball_event(const CandidatePair& center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be > 0");
  auto reference = std::make_shared<DistanceReference>(center);
  return [reference, radius](const EmpiricalPair& pair) { return (*reference)(pair) < radius; };
}

}  // namespace rldp
