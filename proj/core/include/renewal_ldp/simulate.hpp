#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "renewal_ldp/candidate.hpp"
#include "renewal_ldp/model.hpp"
#include "renewal_ldp/rng.hpp"

namespace rldp {

/// Realized Markov renewal path up to and including the first switch after
/// the horizon: states X_0..X_{N_t+1}, waits tau_1..tau_{N_t+1}.
struct Trajectory {
  double horizon = 0.0;
  std::vector<std::size_t> states;    // size N_t + 2
  std::vector<double> waits;          // waits[i-1] = tau_i, size N_t + 1
  std::vector<double> switch_times;   // switch_times[i-1] = S_i
  std::size_t count = 0;              // N_t

  double last_switch_before_horizon() const { return count == 0 ? 0.0 : switch_times[count - 1]; }
};

struct EmpiricalAtom {
  std::size_t state;
  double tau;
  double weight;
};

/// Exact point-mass form of (mu_t, Q_t).
struct EmpiricalPair {
  double horizon = 0.0;
  std::vector<EmpiricalAtom> atoms;  // weights sum to 1
  Matrix counts;                     // jumps x -> y among the first N_t + 1
  Matrix flow;                       // counts / horizon

  std::size_t size() const noexcept { return static_cast<std::size_t>(flow.rows()); }
  double state_mass(std::size_t x) const;
  double inverse_tau_mass(std::size_t x) const;
  double total_inverse_tau_mass() const;
  double out_flow(std::size_t x) const { return flow.row(static_cast<Eigen::Index>(x)).sum(); }
  double in_flow(std::size_t x) const { return flow.col(static_cast<Eigen::Index>(x)).sum(); }
};

/// Simulates (X_k, tau_{k+1}) until the first S_{n+1} > t. Deterministic in
/// (model, t, seed, stream); `stream` selects a Philox substream.
Trajectory simulate(const Model& model, double t, std::uint64_t seed, std::uint64_t stream = 0);

/// Generic driver used by simulate and by tilted samplers. `Law` provides
///   std::size_t initial_state(Philox&)
///   std::size_t next_state(std::size_t x, std::size_t step, Philox&)
///   double wait(std::size_t x, std::size_t step, Philox&)
/// where step k (0-based) produces tau_{k+1} from X_k and X_{k+1} from X_k.
template <class Law>
Trajectory simulate_process(Law& law, double t, Philox& rng) {
  if (!(t > 0.0)) throw std::invalid_argument("simulation horizon must be > 0");
  Trajectory traj;
  traj.horizon = t;
  traj.states.push_back(law.initial_state(rng));
  double s = 0.0;
  for (std::size_t step = 0;; ++step) {
    const std::size_t x = traj.states.back();
    const double tau = law.wait(x, step, rng);
    s += tau;
    traj.waits.push_back(tau);
    traj.switch_times.push_back(s);
    traj.states.push_back(law.next_state(x, step, rng));
    if (s > t) break;
  }
  traj.count = traj.waits.size() - 1;
  return traj;
}

/// Samples an index from a probability row (entries with zero mass are never chosen).
std::size_t sample_categorical(const Eigen::Ref<const Vector>& probabilities, Philox& rng);

EmpiricalPair empirical_pair(const Trajectory& traj, std::size_t state_count);

/// Law-of-large-numbers limit: mu(y, d tau) = nu_y tau psi_y(d tau) / E_nu(tau_1)
/// and Q(y,z) = nu_y p_{y,z} / E_nu(tau_1), on the given (or a default) grid.
CandidatePair lln_limit(const Model& model, std::shared_ptr<const QuadGrid> grid = nullptr);

}  // namespace rldp
