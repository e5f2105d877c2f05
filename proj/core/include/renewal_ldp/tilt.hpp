#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "renewal_ldp/candidate.hpp"
#include "renewal_ldp/model.hpp"
#include "renewal_ldp/rate.hpp"
#include "renewal_ldp/simulate.hpp"

namespace rldp {

/// psi^h_x(d tau) = e^{tau h_x(tau) - log_normalizer} psi_x(d tau).
struct WaitTilt {
  PiecewiseLinear phi;
  double c = 0.0;
  double threshold = 1.0;
  double log_normalizer = 0.0;    // log psi_x(e^{tau h_x}), exact
  std::optional<WaitLaw> proposal;  // conjugate law e^{c tau} psi / psi(e^{c tau}) when c != 0
  double log_envelope = 0.0;        // bound on log(target density / proposal density), unnormalized
  double acceptance = 1.0;          // expected acceptance rate of the rejection sampler
  // Stratified sampler: segment j is [edges[j], edges[j+1]] with envelope
  // e^{segment_envelope[j]}; cumulative holds normalized envelope masses.
  std::vector<double> edges;
  std::vector<double> cumulative;
  std::vector<double> segment_envelope;

  double exponent(double tau) const { return phi(tau) + (tau > threshold ? c * tau : 0.0); }
};

/// Law of the tilted process P^{(h,H)}: kernel q^H and waits psi^h.
class TiltedModel {
 public:
  const Model& base() const noexcept { return base_; }
  const Matrix& kernel() const noexcept { return kernel_; }
  const Matrix& H() const noexcept { return H_; }
  const std::vector<double>& log_kernel_normalizers() const noexcept { return log_kernel_norm_; }
  const std::vector<WaitTilt>& waits() const noexcept { return waits_; }
  const std::vector<double>& log_wait_normalizers() const noexcept { return log_wait_norm_; }
  const TestPair& test() const noexcept { return test_; }
  const std::optional<CandidatePair>& source() const noexcept { return source_; }
  std::shared_ptr<const QuadGrid> grid() const noexcept { return grid_; }
  const Vector& initial() const noexcept { return initial_; }

  /// Stationary law of q^H.
  Vector stationary() const;
  /// Tilted stationary mean wait, on the base grid.
  double stationary_mean_wait() const;
  /// Density of psi^h_x against psi_x at the grid nodes, normalized on the grid.
  std::vector<double> grid_density(std::size_t x) const;

  /// Replace the initial law (defaults to the base gamma).
  void set_initial(const Vector& initial);

  /// Draws a holding time from psi^h_x.
  double sample_wait(std::size_t x, Philox& rng) const;

  friend TiltedModel tilt_from_hH(const Model& model, const TestPair& test);
  friend TiltedModel tilt_from_pair(const Model& model, const CandidatePair& pair, double tol);

 private:
  Model base_;
  Matrix kernel_;
  Matrix H_;
  std::vector<double> log_kernel_norm_;
  std::vector<WaitTilt> waits_;
  std::vector<double> log_wait_norm_;
  TestPair test_;
  std::optional<CandidatePair> source_;
  std::shared_ptr<const QuadGrid> grid_;
  Vector initial_;
};

/// Minimal acceptance rate of the rejection sampler for tilted waits.
inline constexpr double kMinAcceptance = 1e-3;

/// Tilted model for an arbitrary (h, H) with finite normalizers; c_x may be
/// negative (then e^{c tau} damps the tail). Throws std::domain_error on an
/// infinite normalizer or a sampler acceptance below kMinAcceptance.
TiltedModel tilt_from_hH(const Model& model, const TestPair& test);

/// Tilt that makes `pair` the law-of-large-numbers limit. Requires U00.
TiltedModel tilt_from_pair(const Model& model, const CandidatePair& pair, double tol = kDefaultLambda0Tolerance);

/// Law-of-large-numbers pair of the tilted process, on the base grid.
CandidatePair lln_limit(const TiltedModel& tilted);

Trajectory simulate(const TiltedModel& tilted, double t, std::uint64_t seed, std::uint64_t stream = 0);

/// Tilts only the first `tilted_steps` steps, then follows the base law.
Trajectory simulate_hybrid(const TiltedModel& tilted, double t, std::size_t tilted_steps, std::uint64_t seed,
                           std::uint64_t stream = 0);

struct LikelihoodRatio {
  double per_step = 0.0;    // sum over the N_t + 1 steps of log(q^H psi^h / (p psi))
  double functional = 0.0;  // t * (I_{h,H}(mu_t, Q_t) + boundary)
  double boundary = 0.0;    // (tau_{N_t+1} - t + S_{N_t}) h(tau_{N_t+1}), unnormalized
};

/// log dP^{(h,H)}/dP on the first N_t + 1 steps, by both routes.
LikelihoodRatio likelihood_ratio_terms(const Trajectory& traj, const TiltedModel& tilted);

/// log dP^{(h,H)}/dP; checks that both routes agree within 1e-8 relative and
/// throws std::logic_error otherwise. -inf when the path uses an edge with
/// q^H = 0 < p.
double log_likelihood_ratio(const Trajectory& traj, const Model& base, const TiltedModel& tilted);

/// Per-step route restricted to the first `steps` steps (hybrid law).
double log_likelihood_ratio_prefix(const Trajectory& traj, const TiltedModel& tilted, std::size_t steps);

using Event = std::function<bool(const EmpiricalPair&)>;

struct ISOptions {
  std::optional<double> hybrid_delta;  // tilt only floor((1 + delta) Z t) steps
  unsigned workers = 0;
};

struct ISEstimate {
  double t = 0.0;
  std::size_t n = 0;
  double estimate = 0.0;
  double ci = 0.0;           // 95% half-width
  double relative_ci = 0.0;  // ci / estimate
  double rate_estimate = 0.0;  // -log(estimate) / t
  double hit_fraction = 0.0;   // share of tilted paths inside the event
};

/// Importance-sampling estimate of P(event(mu_t, Q_t)) under `base` using
/// paths drawn from `tilted`. Path i uses Philox substream i of `seed`.
ISEstimate estimate_probability(const Model& base, const TiltedModel& tilted, const Event& event, double t,
                                std::size_t n, std::uint64_t seed, const ISOptions& options = {});

/// Event {distance(pair, center) < radius}.
Event ball_event(const CandidatePair& center, double radius);

}  // namespace rldp
