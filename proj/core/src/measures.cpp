#include "renewal_ldp/measures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "renewal_ldp/numeric.hpp"

namespace rldp {

std::string to_string(Membership m) {
  switch (m) {
    case Membership::Ambient:
      return "ambient";
    case Membership::U:
      return "U";
    case Membership::Lambda0:
      return "Lambda0";
    case Membership::U00:
      return "U00";
  }
  return "?";
}

MembershipReport check_membership(const CandidatePair& pair, double tol) {
  pair.validate();
  const std::size_t n = pair.size();
  MembershipReport report;
  double scale = 1.0;
  for (std::size_t x = 0; x < n; ++x) scale = std::max(scale, pair.out_flow(x));
  report.tolerance = tol * scale;
  const double eps = report.tolerance;

  bool in_u = true, in_lambda0 = true;
  for (std::size_t x = 0; x < n; ++x) {
    const double out = pair.out_flow(x);
    report.jump_excess.push_back(out - pair.inverse_tau_mass(x));
    report.divergence.push_back(out - pair.in_flow(x));
    if (report.jump_excess.back() < -eps) {
      in_u = false;
      report.notes.push_back("state " + std::to_string(x) + ": mu(x,1/tau) exceeds the outgoing flow");
    }
    if (std::abs(report.divergence.back()) > eps) {
      in_u = false;
      report.notes.push_back("state " + std::to_string(x) + ": flow is not divergence-free");
    }
    if (std::abs(report.jump_excess.back()) > eps) in_lambda0 = false;
  }
  if (!in_u) return report;
  report.level = Membership::U;
  if (!in_lambda0) {
    report.notes.push_back("outgoing flow differs from mu(x,1/tau)");
    return report;
  }
  report.level = Membership::Lambda0;

  bool regular = true;
  for (std::size_t x = 0; x < n; ++x) {
    if (pair.atoms[x] > eps) {
      regular = false;
      report.notes.push_back("state " + std::to_string(x) + " has mass at +inf");
    }
    if (!(pair.finite_mass(x) > 0.0)) {
      regular = false;
      report.notes.push_back("state " + std::to_string(x) + " has no mass on ]0,+inf[");
    }
  }
  if (!is_irreducible(pair.flow)) {
    regular = false;
    report.notes.push_back("normalized flow is not irreducible");
  }
  if (regular) report.level = Membership::U00;
  return report;
}

DerivedKernels derived_kernels(const CandidatePair& pair, const Model& model, double tol) {
  const auto membership = check_membership(pair, tol);
  if (!membership.at_least(Membership::Lambda0)) {
    std::ostringstream os;
    os << "pair is not in Lambda0; residuals (excess, divergence):";
    for (std::size_t x = 0; x < pair.size(); ++x) {
      os << " (" << membership.jump_excess[x] << ", " << membership.divergence[x] << ")";
    }
    throw std::domain_error(os.str());
  }
  if (!pair.grid->matches(model.waits)) throw std::invalid_argument("pair grid does not match the model");

  const std::size_t n = pair.size();
  DerivedKernels out;
  out.kernel = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  out.waits.resize(n);
  out.fallback.assign(n, false);
  for (std::size_t x = 0; x < n; ++x) {
    const auto xi = static_cast<Eigen::Index>(x);
    const auto& g = pair.grid->state(x);
    const double total_out = pair.out_flow(x);
    const double z = pair.inverse_tau_mass(x);
    if (!(total_out > 0.0) || !(z > 0.0)) {
      out.fallback[x] = true;
      out.kernel.row(xi) = model.kernel.p.row(xi);
      out.waits[x].assign(g.size(), 1.0);
      continue;
    }
    out.kernel.row(xi) = pair.flow.row(xi) / total_out;
    // Normalizing by the grid value of mu(x,1/tau) makes psi^mu_x a probability
    // on the grid; it equals sum_z Q(x,z) up to the Lambda0 tolerance.
    out.waits[x].resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out.waits[x][i] = pair.density[x][i] / (g.nodes[i] * z);
  }
  return out;
}

double rel_entropy_discrete(std::span<const double> nu, std::span<const double> mu) {
  if (nu.size() != mu.size()) throw std::invalid_argument("relative entropy of vectors of different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu[i] <= 0.0) continue;
    if (mu[i] <= 0.0) return kInfinity;
    s += nu[i] * std::log(nu[i] / mu[i]);
  }
  return std::max(0.0, s);
}

double rel_entropy_grid(std::span<const double> density, const StateGrid& grid) {
  if (density.size() != grid.size()) throw std::invalid_argument("density does not match the grid");
  double mass = 0.0, s = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double f = density[i];
    if (f < 0.0) throw std::invalid_argument("negative density");
    mass += grid.weights[i] * f;
    if (f > 0.0) s += grid.weights[i] * f * std::log(f);
  }
  if (std::abs(mass - 1.0) > 1e-8) {
    std::ostringstream os;
    os.precision(12);
    os << "relative entropy needs a probability density; integral is " << mass;
    throw std::invalid_argument(os.str());
  }
  return s < 0.0 && s >= -1e-9 ? 0.0 : std::max(0.0, s);
}

CandidatePair to_candidate(const EmpiricalPair& emp, std::shared_ptr<const QuadGrid> grid, double bandwidth) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("smoothing bandwidth must be > 0");
  if (!grid) throw std::invalid_argument("to_candidate needs a quadrature grid");
  const std::size_t n = emp.size();
  if (grid->size() != n) throw std::invalid_argument("grid and empirical pair have different state counts");

  CandidatePair out;
  out.grid = grid;
  out.atoms.assign(n, 0.0);
  out.flow = emp.flow;
  out.density.resize(n);

  // Lebesgue cell widths around each node.
  std::vector<std::vector<double>> widths(n);
  for (std::size_t x = 0; x < n; ++x) {
    const auto& nodes = grid->state(x).nodes;
    out.density[x].assign(nodes.size(), 0.0);
    widths[x].resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double left = i == 0 ? nodes[i] : 0.5 * (nodes[i] + nodes[i - 1]);
      const double right = i + 1 == nodes.size() ? nodes[i] : 0.5 * (nodes[i] + nodes[i + 1]);
      widths[x][i] = std::max(right - left, 1e-300);
    }
  }

  std::vector<double> kernel;
  for (const auto& atom : emp.atoms) {
    const auto& g = grid->state(atom.state);
    const auto& nodes = g.nodes;
    const auto first = std::lower_bound(nodes.begin(), nodes.end(), atom.tau - 8.0 * bandwidth) - nodes.begin();
    const auto last = std::upper_bound(nodes.begin(), nodes.end(), atom.tau + 8.0 * bandwidth) - nodes.begin();
    kernel.assign(static_cast<std::size_t>(std::max<std::ptrdiff_t>(last - first, 0)), 0.0);
    double total = 0.0;
    for (auto i = first; i < last; ++i) {
      const double z = (nodes[static_cast<std::size_t>(i)] - atom.tau) / bandwidth;
      const double k = std::exp(-0.5 * z * z) * widths[atom.state][static_cast<std::size_t>(i)];
      kernel[static_cast<std::size_t>(i - first)] = k;
      total += k;
    }
    if (!(total > 0.0)) {
      // No node within reach: the nearest node takes the whole atom.
      auto it = std::lower_bound(nodes.begin(), nodes.end(), atom.tau);
      std::size_t j = static_cast<std::size_t>(it - nodes.begin());
      if (j == nodes.size() || (j > 0 && atom.tau - nodes[j - 1] < nodes[j] - atom.tau)) j = j == 0 ? 0 : j - 1;
      out.density[atom.state][j] += atom.weight / g.weights[j];
      continue;
    }
    for (auto i = first; i < last; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      out.density[atom.state][idx] += atom.weight * kernel[idx - static_cast<std::size_t>(first)] / (total * g.weights[idx]);
    }
  }
  return out;
}

std::vector<std::vector<DistanceReference::Point>> DistanceReference::points_of(const CandidatePair& pair) {
  std::vector<std::vector<Point>> pts(pair.size());
  for (std::size_t x = 0; x < pair.size(); ++x) {
    const auto& g = pair.grid->state(x);
    pts[x].reserve(g.size() + 1);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double m = g.weights[i] * pair.density[x][i];
      if (m != 0.0) pts[x].push_back({g.nodes[i] / (1.0 + g.nodes[i]), m});
    }
    if (pair.atoms[x] != 0.0) pts[x].push_back({1.0, pair.atoms[x]});
    std::sort(pts[x].begin(), pts[x].end(), [](const Point& a, const Point& b) { return a.u < b.u; });
  }
  return pts;
}

std::vector<std::vector<DistanceReference::Point>> DistanceReference::points_of(const EmpiricalPair& pair) {
  std::vector<std::vector<Point>> pts(pair.size());
  for (const auto& a : pair.atoms) {
    const double u = std::isinf(a.tau) ? 1.0 : a.tau / (1.0 + a.tau);
    pts[a.state].push_back({u, a.weight});
  }
  for (auto& p : pts) std::sort(p.begin(), p.end(), [](const Point& a, const Point& b) { return a.u < b.u; });
  return pts;
}

DistanceReference::DistanceReference(const CandidatePair& pair) : points_(points_of(pair)), flow_(pair.flow) {}
DistanceReference::DistanceReference(const EmpiricalPair& pair) : points_(points_of(pair)), flow_(pair.flow) {}

double DistanceReference::measure_distance(const std::vector<std::vector<Point>>& other) const {
  if (other.size() != points_.size()) throw std::invalid_argument("distance between pairs on different state spaces");
  double total = 0.0;
  for (std::size_t x = 0; x < points_.size(); ++x) {
    const auto& a = points_[x];
    const auto& b = other[x];
    std::size_t i = 0, j = 0;
    double cumulative = 0.0, integral = 0.0, u_prev = 0.0;
    while (i < a.size() || j < b.size()) {
      const bool take_a = j == b.size() || (i < a.size() && a[i].u <= b[j].u);
      const double u = take_a ? a[i].u : b[j].u;
      integral += std::abs(cumulative) * (u - u_prev);
      u_prev = u;
      cumulative += take_a ? a[i++].mass : -b[j++].mass;
    }
    integral += std::abs(cumulative) * (1.0 - u_prev);
    total += std::abs(cumulative) + integral;
  }
  return total;
}

double DistanceReference::operator()(const EmpiricalPair& other) const {
  if (other.flow.rows() != flow_.rows()) throw std::invalid_argument("distance between pairs on different state spaces");
  return measure_distance(points_of(other)) + (flow_ - other.flow).cwiseAbs().maxCoeff();
}

double DistanceReference::operator()(const CandidatePair& other) const {
  if (other.flow.rows() != flow_.rows()) throw std::invalid_argument("distance between pairs on different state spaces");
  return measure_distance(points_of(other)) + (flow_ - other.flow).cwiseAbs().maxCoeff();
}

double distance(const CandidatePair& a, const CandidatePair& b) { return DistanceReference(a)(b); }
double distance(const EmpiricalPair& a, const EmpiricalPair& b) { return DistanceReference(a)(b); }
double distance(const EmpiricalPair& a, const CandidatePair& b) { return DistanceReference(b)(a); }
double distance(const CandidatePair& a, const EmpiricalPair& b) { return DistanceReference(a)(b); }

CandidatePair regularize(const CandidatePair& pair, double eps, const Model& model, double tol) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("regularize needs eps in ]0,1]");
  const auto membership = check_membership(pair, tol);
  if (!membership.at_least(Membership::U)) throw std::invalid_argument("regularize needs a pair in U");
  if (!pair.grid->matches(model.waits)) throw std::invalid_argument("pair grid does not match the model");
  if (eps == 1.0) return pair;

  const std::size_t n = pair.size();
  for (std::size_t x = 0; x < n; ++x) {
    if (pair.atoms[x] > 0.0 && std::isinf(mgf_abscissa(model.waits[x]))) {
      throw std::domain_error("state " + model.states.label(x) +
                              " carries mass at +inf with xi = +inf; the rate is infinite");
    }
  }

  // Reference pair built from the stationary law and bounded sets A_x.
  const Vector nu = stationary(model.kernel);
  std::vector<double> cond_mass(n), cond_mean(n);
  std::vector<std::size_t> cut(n);
  double z_ref = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const auto& g = pair.grid->state(x);
    double acc = 0.0, first_moment = 0.0;
    std::size_t i = 0;
    while (i < g.size() && (i == 0 || acc < 0.99)) {
      acc += g.weights[i];
      first_moment += g.weights[i] * g.nodes[i];
      ++i;
    }
    cut[x] = i;
    cond_mass[x] = acc;
    cond_mean[x] = first_moment / acc;
    z_ref += nu(static_cast<Eigen::Index>(x)) * cond_mean[x];
  }
  CandidatePair ref;
  ref.grid = pair.grid;
  ref.atoms.assign(n, 0.0);
  ref.density.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    const auto& g = pair.grid->state(x);
    ref.density[x].assign(g.size(), 0.0);
    for (std::size_t i = 0; i < cut[x]; ++i) {
      ref.density[x][i] = nu(static_cast<Eigen::Index>(x)) * g.nodes[i] / (cond_mass[x] * z_ref);
    }
  }
  ref.flow = (nu.asDiagonal() * model.kernel.p) / z_ref;

  CandidatePair out = mix(pair, ref, eps);

  // Spread remaining mass at +inf over the far tail of psi_x.
  for (std::size_t x = 0; x < n; ++x) {
    const double a = out.atoms[x];
    if (a <= 0.0) continue;
    const auto& g = pair.grid->state(x);
    const double m = out.finite_mass(x);
    const double z = out.inverse_tau_mass(x);
    // Smallest far-tail set (psi-mass at most 1e-8) that keeps alpha >= 0.
    std::size_t start = g.size() - 1;
    double tail_mass = g.weights[start], tail_inv = g.weights[start] / g.nodes[start];
    while (start > 0 && tail_mass + g.weights[start - 1] <= 1e-8) {
      --start;
      tail_mass += g.weights[start];
      tail_inv += g.weights[start] / g.nodes[start];
    }
    const double r = tail_inv / tail_mass;  // psi(1/tau | I)
    if (r * (m + a) > 0.5 * z) {
      throw std::domain_error("grid tail too short to reallocate the mass at +inf of state " + model.states.label(x));
    }
    const double beta = 1.0 / (1.0 - r * m / z);
    const double alpha = 1.0 - beta * a * r / z;
    for (std::size_t i = 0; i < g.size(); ++i) out.density[x][i] *= alpha;
    for (std::size_t i = start; i < g.size(); ++i) out.density[x][i] += beta * a / tail_mass;
    out.atoms[x] = 0.0;
  }
  return out;
}

}  // namespace rldp
