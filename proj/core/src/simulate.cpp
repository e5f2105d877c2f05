#include "renewal_ldp/simulate.hpp"

#include <cmath>
#include <numeric>

namespace rldp {
namespace {

class BaseLaw {
 public:
  explicit BaseLaw(const Model& model) : model_(model) {}

  std::size_t initial_state(Philox& rng) const { return sample_categorical(model_.initial, rng); }
  std::size_t next_state(std::size_t x, std::size_t, Philox& rng) const {
    return sample_categorical(model_.kernel.p.row(static_cast<Eigen::Index>(x)).transpose(), rng);
  }
  double wait(std::size_t x, std::size_t, Philox& rng) const { return sample(model_.waits[x], rng); }

 private:
  const Model& model_;
};

}  // namespace

std::size_t sample_categorical(const Eigen::Ref<const Vector>& probabilities, Philox& rng) {
  const double u = uniform_open01(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    if (probabilities(i) <= 0.0) continue;
    last_positive = static_cast<std::size_t>(i);
    acc += probabilities(i);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

Trajectory simulate(const Model& model, double t, std::uint64_t seed, std::uint64_t stream) {
  if (!(t > 0.0)) throw std::invalid_argument("simulation horizon must be > 0");
  require_valid(model);
  Philox rng = Philox::substream(seed, stream);
  BaseLaw law(model);
  return simulate_process(law, t, rng);
}

double EmpiricalPair::state_mass(std::size_t x) const {
  double s = 0.0;
  for (const auto& a : atoms) {
    if (a.state == x) s += a.weight;
  }
  return s;
}

double EmpiricalPair::inverse_tau_mass(std::size_t x) const {
  double s = 0.0;
  for (const auto& a : atoms) {
    if (a.state == x) s += a.weight / a.tau;
  }
  return s;
}

double EmpiricalPair::total_inverse_tau_mass() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.weight / a.tau;
  return s;
}

EmpiricalPair empirical_pair(const Trajectory& traj, std::size_t state_count) {
  const double t = traj.horizon;
  const auto n = static_cast<Eigen::Index>(state_count);
  EmpiricalPair pair;
  pair.horizon = t;
  pair.counts = Matrix::Zero(n, n);
  pair.atoms.reserve(traj.count + 1);
  for (std::size_t k = 1; k <= traj.count; ++k) {
    pair.atoms.push_back({traj.states[k - 1], traj.waits[k - 1], traj.waits[k - 1] / t});
  }
  const double residual = t - traj.last_switch_before_horizon();
  if (residual > 0.0) pair.atoms.push_back({traj.states[traj.count], traj.waits[traj.count], residual / t});
  for (std::size_t k = 1; k <= traj.count + 1; ++k) {
    pair.counts(static_cast<Eigen::Index>(traj.states[k - 1]), static_cast<Eigen::Index>(traj.states[k])) += 1.0;
  }
  pair.flow = pair.counts / t;
  return pair;
}

CandidatePair lln_limit(const Model& model, std::shared_ptr<const QuadGrid> grid) {
  require_valid(model);
  for (const auto& law : model.waits) {
    if (!std::isfinite(mean_wait(law))) {
      throw std::domain_error("LLN limit undefined: infinite mean holding time for " + law.describe());
    }
  }
  if (!grid) grid = QuadGrid::build(model);
  if (!grid->matches(model.waits)) throw std::invalid_argument("grid was built for different waiting laws");

  const Vector nu = stationary(model.kernel);
  const std::size_t n = model.size();
  // Grid means keep the discretized measure exactly normalized.
  std::vector<double> grid_mean(n, 0.0);
  double e_nu = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    const auto& g = grid->state(y);
    for (std::size_t i = 0; i < g.size(); ++i) grid_mean[y] += g.weights[i] * g.nodes[i];
    e_nu += nu(static_cast<Eigen::Index>(y)) * grid_mean[y];
  }

  CandidatePair pair;
  pair.grid = grid;
  pair.atoms.assign(n, 0.0);
  pair.density.resize(n);
  for (std::size_t y = 0; y < n; ++y) {
    const auto& g = grid->state(y);
    const double scale = nu(static_cast<Eigen::Index>(y)) / e_nu;
    pair.density[y].resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) pair.density[y][i] = scale * g.nodes[i];
  }
  pair.flow = (nu.asDiagonal() * model.kernel.p) / e_nu;
  return pair;
}

}  // namespace rldp
