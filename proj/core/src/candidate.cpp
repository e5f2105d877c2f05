#include "renewal_ldp/candidate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "renewal_ldp/numeric.hpp"

namespace rldp {

StateGrid build_state_grid(const WaitLaw& law, int nodes, double tail) {
  if (nodes < 2) throw std::invalid_argument("quadrature grid needs at least two nodes per state");
  StateGrid grid;
  if (const auto* d = law.as<Deterministic>()) {
    grid.nodes = {d->value};
    grid.weights = {1.0};
    return grid;
  }
  if (const auto* m = law.as<Mixture>()) {
    std::vector<std::pair<double, double>> merged;
    for (std::size_t c = 0; c < m->components.size(); ++c) {
      const StateGrid sub = build_state_grid(m->components[c], nodes, tail);
      for (std::size_t i = 0; i < sub.size(); ++i) merged.emplace_back(sub.nodes[i], m->weights[c] * sub.weights[i]);
    }
    std::sort(merged.begin(), merged.end());
    for (const auto& [node, weight] : merged) {
      grid.nodes.push_back(node);
      grid.weights.push_back(weight);
    }
    const double total = std::accumulate(grid.weights.begin(), grid.weights.end(), 0.0);
    for (double& w : grid.weights) w /= total;
    return grid;
  }

  const double lo_q = quantile(law, tail);
  const double hi_q = quantile(law, 1.0 - tail);
  const double head_mass = cdf(law, lo_q);
  const double tail_mass = survival(law, hi_q);

  const double a = std::log(lo_q), b = std::log(hi_q);
  const GaussLegendreRule rule = gauss_legendre(nodes);
  const double half = 0.5 * (b - a), centre = 0.5 * (a + b);

  const double head_node = 0.5 * (support_lower(law) + lo_q);
  grid.nodes.push_back(head_node);
  grid.weights.push_back(head_mass);
  for (int i = 0; i < nodes; ++i) {
    const double tau = std::exp(centre + half * rule.nodes[static_cast<std::size_t>(i)]);
    grid.nodes.push_back(tau);
    grid.weights.push_back(half * rule.weights[static_cast<std::size_t>(i)] * pdf(law, tau) * tau);
  }
  const double above = partial_expectation_above(law, hi_q);
  const double tail_node = std::isfinite(above) && tail_mass > 0.0 ? above / tail_mass : 2.0 * hi_q;
  grid.nodes.push_back(std::max(tail_node, hi_q));
  grid.weights.push_back(tail_mass);

  const double total = std::accumulate(grid.weights.begin(), grid.weights.end(), 0.0);
  for (double& w : grid.weights) w /= total;
  return grid;
}

std::shared_ptr<const QuadGrid> QuadGrid::build(const std::vector<WaitLaw>& laws, int nodes_per_state, double tail) {
  if (!(tail > 0.0 && tail < 0.5)) throw std::invalid_argument("grid tail level must lie in ]0, 0.5[");
  auto grid = std::make_shared<QuadGrid>();
  grid->laws_ = laws;
  grid->nodes_per_state_ = nodes_per_state;
  grid->tail_ = tail;
  for (const auto& law : laws) grid->states_.push_back(build_state_grid(law, nodes_per_state, tail));
  return grid;
}

double CandidatePair::finite_mass(std::size_t x) const {
  const auto& w = grid->state(x).weights;
  const auto& rho = density.at(x);
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * rho[i];
  return s;
}

double CandidatePair::total_mass() const {
  double s = 0.0;
  for (std::size_t x = 0; x < size(); ++x) s += state_mass(x);
  return s;
}

double CandidatePair::inverse_tau_mass(std::size_t x) const {
  const auto& g = grid->state(x);
  const auto& rho = density.at(x);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g.weights[i] * rho[i] / g.nodes[i];
  return s;
}

void CandidatePair::validate() const {
  if (!grid) throw std::invalid_argument("candidate pair has no quadrature grid");
  const std::size_t n = grid->size();
  if (density.size() != n || atoms.size() != n || flow.rows() != static_cast<Eigen::Index>(n) ||
      flow.cols() != static_cast<Eigen::Index>(n)) {
    throw std::invalid_argument("candidate pair shapes disagree with the state space");
  }
  for (std::size_t x = 0; x < n; ++x) {
    if (density[x].size() != grid->state(x).size()) {
      throw std::invalid_argument("density of state " + std::to_string(x) + " does not match its grid");
    }
    for (double r : density[x]) {
      if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("densities must be finite and >= 0");
    }
    if (!(atoms[x] >= 0.0 && atoms[x] <= 1.0)) throw std::invalid_argument("atoms at +inf must lie in [0,1]");
  }
  if (!((flow.array() >= 0.0).all() && flow.allFinite())) throw std::invalid_argument("flow must be finite and >= 0");
  const double mass = total_mass();
  if (std::abs(mass - 1.0) > 1e-9) {
    std::ostringstream os;
    os.precision(17);
    os << "candidate measure has total mass " << mass;
    throw std::invalid_argument(os.str());
  }
}

CandidatePair mix(const CandidatePair& a, const CandidatePair& b, double lambda) {
  if (a.grid != b.grid && !(a.grid && b.grid && a.grid->laws() == b.grid->laws() &&
                            a.grid->nodes_per_state() == b.grid->nodes_per_state() && a.grid->tail() == b.grid->tail())) {
    throw std::invalid_argument("cannot mix candidate pairs on different grids");
  }
  CandidatePair out;
  out.grid = a.grid;
  out.density.resize(a.size());
  out.atoms.resize(a.size());
  for (std::size_t x = 0; x < a.size(); ++x) {
    out.density[x].resize(a.density[x].size());
    for (std::size_t i = 0; i < a.density[x].size(); ++i) {
      out.density[x][i] = lambda * a.density[x][i] + (1.0 - lambda) * b.density[x][i];
    }
    out.atoms[x] = lambda * a.atoms[x] + (1.0 - lambda) * b.atoms[x];
  }
  out.flow = lambda * a.flow + (1.0 - lambda) * b.flow;
  return out;
}

}  // namespace rldp
