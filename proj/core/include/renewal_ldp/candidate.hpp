#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "renewal_ldp/model.hpp"

namespace rldp {

/// Quadrature nodes for one state: integral f dpsi_x ~ sum_i weights[i] f(nodes[i]).
struct StateGrid {
  std::vector<double> nodes;    // ascending
  std::vector<double> weights;  // positive, sum to 1

  std::size_t size() const noexcept { return nodes.size(); }
};

inline constexpr int kDefaultGridNodes = 400;
inline constexpr double kDefaultGridTail = 1e-10;

/// Per-state quadrature against psi_x.
///
/// Continuous laws use Gauss-Legendre in log(tau) between the quantiles
/// `tail` and `1 - tail`, plus one node per truncated tail placed at its
/// conditional mean and carrying its psi-mass, so that both psi(1) and
/// psi(tau) are integrated without truncation bias. A deterministic law
/// is a single node; a mixture is the weighted union of its components.
class QuadGrid {
 public:
  static std::shared_ptr<const QuadGrid> build(const std::vector<WaitLaw>& laws, int nodes_per_state = kDefaultGridNodes,
                                               double tail = kDefaultGridTail);
  static std::shared_ptr<const QuadGrid> build(const Model& model, int nodes_per_state = kDefaultGridNodes,
                                               double tail = kDefaultGridTail) {
    return build(model.waits, nodes_per_state, tail);
  }

  std::size_t size() const noexcept { return states_.size(); }
  const StateGrid& state(std::size_t x) const { return states_.at(x); }
  const std::vector<WaitLaw>& laws() const noexcept { return laws_; }
  int nodes_per_state() const noexcept { return nodes_per_state_; }
  double tail() const noexcept { return tail_; }

  /// True when the grid was built for exactly these waiting laws.
  bool matches(const std::vector<WaitLaw>& laws) const { return laws == laws_; }

 private:
  std::vector<WaitLaw> laws_;
  std::vector<StateGrid> states_;
  int nodes_per_state_ = kDefaultGridNodes;
  double tail_ = kDefaultGridTail;
};

StateGrid build_state_grid(const WaitLaw& law, int nodes, double tail);

/// Analytic element of Lambda: mu(x, d tau) = density[x](tau) psi_x(d tau)
/// + atoms[x] delta_{+inf}, together with a flow matrix Q.
struct CandidatePair {
  std::shared_ptr<const QuadGrid> grid;
  std::vector<std::vector<double>> density;  // density[x][i] at grid->state(x).nodes[i]
  std::vector<double> atoms;                 // mu(x, {+inf})
  Matrix flow;

  std::size_t size() const noexcept { return atoms.size(); }

  /// mu(x, ]0,+inf[)
  double finite_mass(std::size_t x) const;
  /// mu(x, ]0,+inf])
  double state_mass(std::size_t x) const { return finite_mass(x) + atoms.at(x); }
  double total_mass() const;
  /// mu(x, 1/tau); the atom at +inf contributes nothing.
  double inverse_tau_mass(std::size_t x) const;
  /// sum_y Q(x,y)
  double out_flow(std::size_t x) const { return flow.row(static_cast<Eigen::Index>(x)).sum(); }
  double in_flow(std::size_t x) const { return flow.col(static_cast<Eigen::Index>(x)).sum(); }

  /// Throws std::invalid_argument unless densities, atoms and flow are
  /// nonnegative, shapes agree with the grid, and the mass is 1 within 1e-9.
  void validate() const;
};

/// Convex combination lambda * a + (1 - lambda) * b on a shared grid.
CandidatePair mix(const CandidatePair& a, const CandidatePair& b, double lambda);

}  // namespace rldp
