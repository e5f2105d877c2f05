#include "renewal_ldp/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace rldp {

StateSpace::StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ModelError("state space must contain at least one state");
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) throw ModelError("duplicate state label '" + l + "'");
  }
}

std::optional<std::size_t> StateSpace::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

bool is_irreducible(const Matrix& weights) {
  const auto n = weights.rows();
  if (n == 0 || weights.cols() != n) return false;
  auto reaches_all = [&](bool transpose) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const auto x = stack.back();
      stack.pop_back();
      for (Eigen::Index y = 0; y < n; ++y) {
        const double w = transpose ? weights(y, x) : weights(x, y);
        if (w > 0.0 && !seen[static_cast<std::size_t>(y)]) {
          seen[static_cast<std::size_t>(y)] = true;
          stack.push_back(y);
        }
      }
    }
    return std::find(seen.begin(), seen.end(), false) == seen.end();
  };
  return reaches_all(false) && reaches_all(true);
}

ValidationReport validate_model(const Model& model) {
  ValidationReport report;
  auto fail = [&](std::string msg) {
    report.ok = false;
    report.violations.push_back(std::move(msg));
  };
  const auto n = static_cast<Eigen::Index>(model.size());
  if (n == 0) {
    fail("state space is empty");
    return report;
  }
  const Matrix& p = model.kernel.p;
  if (p.rows() != n || p.cols() != n) {
    std::ostringstream os;
    os << "kernel is " << p.rows() << "x" << p.cols() << " but there are " << n << " states";
    fail(os.str());
    return report;
  }
  bool entries_ok = true;
  for (Eigen::Index x = 0; x < n; ++x) {
    double row = 0.0;
    for (Eigen::Index y = 0; y < n; ++y) {
      const double v = p(x, y);
      if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream os;
        os << "entry (" << x << "," << y << ") = " << v << " outside [0,1]";
        fail(os.str());
        entries_ok = false;
      }
      row += v;
    }
    if (std::abs(row - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "row " << x << " sums to " << row;
      fail(os.str());
      entries_ok = false;
    }
  }
  if (entries_ok && !is_irreducible(p)) fail("kernel not irreducible");

  if (model.waits.size() != model.size()) {
    std::ostringstream os;
    os << "waiting laws given for " << model.waits.size() << " of " << n << " states";
    fail(os.str());
  }
  if (model.initial.size() != n) {
    fail("initial law has the wrong length");
  } else {
    double total = 0.0;
    for (Eigen::Index x = 0; x < n; ++x) {
      if (!(model.initial(x) >= 0.0)) {
        std::ostringstream os;
        os << "initial mass of state " << x << " is negative";
        fail(os.str());
      }
      total += model.initial(x);
    }
    if (std::abs(total - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "initial law sums to " << total;
      fail(os.str());
    }
  }
  return report;
}

void require_valid(const Model& model) {
  const auto report = validate_model(model);
  if (report.ok) return;
  std::string msg = "invalid model:";
  for (const auto& v : report.violations) msg += " " + v + ";";
  throw ModelError(msg);
}

Vector stationary(const Kernel& kernel) {
  const Matrix& p = kernel.p;
  if (p.rows() == 0 || p.rows() != p.cols() || !is_irreducible(p)) {
    throw ModelError("no unique stationary law: kernel is not irreducible");
  }
  const auto n = p.rows();
  // nu (P - I) = 0 with the last balance equation replaced by sum(nu) = 1.
  Matrix a = p.transpose() - Matrix::Identity(n, n);
  a.row(n - 1).setOnes();
  Vector b = Vector::Zero(n);
  b(n - 1) = 1.0;
  const Eigen::FullPivLU<Matrix> lu(a);
  Vector nu = lu.solve(b);
  nu += lu.solve(b - a * nu);  // one step of iterative refinement
  nu /= nu.sum();
  return nu;
}

double stationary_mean_wait(const Model& model) {
  const Vector nu = stationary(model.kernel);
  double e = 0.0;
  for (std::size_t y = 0; y < model.size(); ++y) e += nu(static_cast<Eigen::Index>(y)) * mean_wait(model.waits[y]);
  return e;
}

Model double_variables(const StateSpace& states, const Kernel& kernel, const PairWaits& pair_waits,
                       const Vector& initial) {
  if (!is_irreducible(kernel.p)) throw ModelError("double_variables needs an irreducible kernel");
  const std::size_t n = states.size();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      if (kernel(x, y) > 0.0) edges.emplace_back(x, y);
    }
  }
  std::vector<std::string> labels;
  std::vector<WaitLaw> waits;
  for (const auto& [x, y] : edges) {
    const auto it = pair_waits.find({x, y});
    if (it == pair_waits.end()) {
      throw ModelError("pair_waits has no law for supported edge (" + states.label(x) + "," + states.label(y) + ")");
    }
    labels.push_back(states.label(x) + ">" + states.label(y));
    waits.push_back(it->second);
  }
  const auto m = static_cast<Eigen::Index>(edges.size());
  Matrix p = Matrix::Zero(m, m);
  Vector gamma(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto [x, y] = edges[static_cast<std::size_t>(i)];
    gamma(i) = initial(static_cast<Eigen::Index>(x)) * kernel(x, y);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto [y2, z] = edges[static_cast<std::size_t>(j)];
      if (y2 == y) p(i, j) = kernel(y, z);
    }
  }
  return Model{StateSpace(std::move(labels)), Kernel{std::move(p)}, std::move(waits), std::move(gamma)};
}

}  // namespace rldp
