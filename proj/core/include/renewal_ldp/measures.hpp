#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "renewal_ldp/candidate.hpp"
#include "renewal_ldp/model.hpp"
#include "renewal_ldp/simulate.hpp"

namespace rldp {

inline constexpr double kDefaultLambda0Tolerance = 1e-7;

/// Nested constraint classes: U00 within Lambda0 within U within the ambient space.
enum class Membership { Ambient = 0, U = 1, Lambda0 = 2, U00 = 3 };

std::string to_string(Membership m);

struct MembershipReport {
  Membership level = Membership::Ambient;
  double tolerance = 0.0;                // absolute tolerance actually applied
  std::vector<double> jump_excess;       // sum_y Q(x,y) - mu(x, 1/tau)
  std::vector<double> divergence;        // sum_y Q(x,y) - sum_y Q(y,x)
  std::vector<std::string> notes;        // reasons a stricter class was refused

  bool at_least(Membership m) const { return static_cast<int>(level) >= static_cast<int>(m); }
};

/// `tol` is relative to max(1, max_x sum_y Q(x,y)).
MembershipReport check_membership(const CandidatePair& pair, double tol = kDefaultLambda0Tolerance);

struct DerivedKernels {
  Matrix kernel;                            // p^Q
  std::vector<std::vector<double>> waits;   // density of psi^mu_x w.r.t. psi_x on the grid
  std::vector<bool> fallback;               // rows with Q(x,.) = 0 use (p_x, psi_x)
};

/// p^Q(x,y) = Q(x,y) / sum_z Q(x,z) and psi^mu_x(d tau) proportional to mu(x, d tau)/tau.
/// Throws std::domain_error when the pair is not in Lambda0 within `tol`.
DerivedKernels derived_kernels(const CandidatePair& pair, const Model& model, double tol = kDefaultLambda0Tolerance);

/// sum_i nu_i log(nu_i / mu_i) with 0 log 0 = 0; +inf when nu charges a null atom of mu.
double rel_entropy_discrete(std::span<const double> nu, std::span<const double> mu);

/// Integral f log f d psi on a state grid, for a density f with integral 1 within 1e-8.
double rel_entropy_grid(std::span<const double> density, const StateGrid& grid);

/// Projects point masses onto grid densities by Gaussian smoothing in tau
/// (bandwidth in time units). Total mass per state and the flow are preserved.
CandidatePair to_candidate(const EmpiricalPair& emp, std::shared_ptr<const QuadGrid> grid, double bandwidth);

/// Metric on Lambda: per state, the mass difference plus the L1 distance between
/// the cumulative mass functions in u = tau / (1 + tau) (u = 1 at tau = +inf),
/// summed over states, plus the max-norm distance of the flows.
double distance(const CandidatePair& a, const CandidatePair& b);
double distance(const EmpiricalPair& a, const EmpiricalPair& b);
double distance(const EmpiricalPair& a, const CandidatePair& b);
double distance(const CandidatePair& a, const EmpiricalPair& b);

/// Precomputed reference for repeated distances to one pair.
class DistanceReference {
 public:
  explicit DistanceReference(const CandidatePair& pair);
  explicit DistanceReference(const EmpiricalPair& pair);

  double operator()(const EmpiricalPair& other) const;
  double operator()(const CandidatePair& other) const;

 private:
  struct Point {
    double u;
    double mass;
  };
  std::vector<std::vector<Point>> points_;  // per state, sorted by u
  Matrix flow_;

  double measure_distance(const std::vector<std::vector<Point>>& other) const;
  static std::vector<std::vector<Point>> points_of(const CandidatePair& pair);
  static std::vector<std::vector<Point>> points_of(const EmpiricalPair& pair);
};

/// Mixture eps (mu, Q) + (1 - eps) (mu0, Q0) with the reference pair
/// mu0(x, d tau) = nu_x tau psi_x(d tau | A_x) / Z, Q0 = nu p / Z, where A_x is
/// the grid support below the 0.99-quantile; atoms at +inf are then spread over
/// a far tail [M, +inf[ keeping mu(x, ]0,+inf]) and mu(x, 1/tau) fixed.
CandidatePair regularize(const CandidatePair& pair, double eps, const Model& model,
                         double tol = kDefaultLambda0Tolerance);

}  // namespace rldp
