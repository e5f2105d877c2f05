#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "renewal_ldp/wait_law.hpp"

namespace rldp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Ordered, duplicate-free state labels; index i is stable for a run.
class StateSpace {
 public:
  StateSpace() = default;
  explicit StateSpace(std::vector<std::string> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<std::size_t> index_of(const std::string& label) const;

  bool operator==(const StateSpace&) const = default;

 private:
  std::vector<std::string> labels_;
};

/// Row-stochastic transition matrix p_{x,y}.
struct Kernel {
  Matrix p;

  std::size_t size() const noexcept { return static_cast<std::size_t>(p.rows()); }
  double operator()(std::size_t x, std::size_t y) const { return p(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)); }
};

/// Finite-graph Markov renewal model (p, psi, gamma).
struct Model {
  StateSpace states;
  Kernel kernel;
  std::vector<WaitLaw> waits;  // waits[x] = psi_x
  Vector initial;              // gamma

  std::size_t size() const noexcept { return states.size(); }
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Thrown by operations whose precondition is a valid model.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ValidationReport validate_model(const Model& model);

/// Throws ModelError listing every violation when the model is invalid.
void require_valid(const Model& model);

/// Strong connectivity of the directed graph {(x,y) : weights(x,y) > 0}.
bool is_irreducible(const Matrix& weights);

/// Unique invariant law of an irreducible kernel.
Vector stationary(const Kernel& kernel);

/// E_nu(tau_1) = sum_y nu_y * mean_wait(psi_y) under the stationary law.
double stationary_mean_wait(const Model& model);

using PairWaits = std::map<std::pair<std::size_t, std::size_t>, WaitLaw>;

/// Chain on pairs (x,y) with p_{x,y} > 0 whose holding law at (x,y) is
/// pair_waits(x,y); the pair (x,y) moves to (y,z) with probability p_{y,z}.
/// The initial law is gamma_x p_{x,y}.
Model double_variables(const StateSpace& states, const Kernel& kernel, const PairWaits& pair_waits,
                       const Vector& initial);

}  // namespace rldp
