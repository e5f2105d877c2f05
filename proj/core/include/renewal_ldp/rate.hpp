#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "renewal_ldp/candidate.hpp"
#include "renewal_ldp/measures.hpp"
#include "renewal_ldp/model.hpp"
#include "renewal_ldp/simulate.hpp"

namespace rldp {

/// Raised when an iterative solver stops before meeting its tolerance.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Continuous function of tau, linear in log(tau) between knots and constant
/// outside them.
struct PiecewiseLinear {
  std::vector<double> log_knots;  // ascending
  std::vector<double> values;

  static PiecewiseLinear constant(double value) { return {{0.0}, {value}}; }

  double operator()(double tau) const;
  double max() const;
  double sup_norm() const;
};

/// Test pair (h, H) with h_x(tau) = phi_x(tau) / tau + c_x 1{tau > M_x}.
struct TestPair {
  std::vector<PiecewiseLinear> phi;
  std::vector<double> c;
  std::vector<double> threshold;  // M_x
  Matrix H;

  std::size_t size() const noexcept { return phi.size(); }
  /// tau h_x(tau); at tau = +inf this is +-inf (or 0) and h_x(+inf) = c_x.
  double exponent(std::size_t x, double tau) const;
  double h(std::size_t x, double tau) const;

  /// phi = 0, c = 0, H = 0, which leaves the model unchanged.
  static TestPair zero(std::size_t n);
};

/// psi_x(e^{tau h_x(tau)}), computed exactly: closed forms on constant pieces
/// and adaptive quadrature on the linear ones. +inf when divergent.
double wait_normalizer(const WaitLaw& law, const PiecewiseLinear& phi, double c, double threshold);

/// log psi_x(e^{tau h_x}) for every state.
std::vector<double> log_wait_normalizers(const Model& model, const TestPair& test);

/// log sum_z p_{x,z} e^{H(x,z)} for every state.
std::vector<double> log_kernel_normalizers(const Model& model, const TestPair& test);

/// Names the first violated condition of Gamma, or nullopt for a member.
std::optional<std::string> gamma_violation(const Model& model, const TestPair& test);

struct StateTerms {
  double kernel = 0.0;  // mu(x,1/tau) H(p^Q_x | p_x)
  double wait = 0.0;    // mu(x,1/tau) H(psi^mu_x | psi_x)
  double atom = 0.0;    // xi_x mu(x,{+inf}), 0 * inf = 0
};

struct TraceEntry {
  std::string stage;
  int iteration = 0;
  double value = 0.0;
};

struct RateReport {
  double value = 0.0;
  std::vector<StateTerms> terms;         // empty when value is +inf by the constraint gate
  std::vector<double> jump_excess;       // constraint residuals
  std::vector<double> divergence;
  std::vector<double> argmin;            // minimizing zeta for I1
  std::vector<TraceEntry> trace;
  std::string note;
};

/// I(mu, Q); +inf outside Lambda0 (within `tol`).
RateReport rate_I(const Model& model, const CandidatePair& pair, double tol = kDefaultLambda0Tolerance);

/// I_{h,H}. Candidate pairs integrate against their quadrature grid (so that
/// the supremum bound I_{h,H} <= I holds exactly for the discretized pair);
/// empirical pairs are integrated exactly. Throws std::invalid_argument when
/// the test pair is not in Gamma.
double rate_Ihh(const Model& model, const CandidatePair& pair, const TestPair& test);
double rate_Ihh(const Model& model, const EmpiricalPair& pair, const TestPair& test);

/// Same functional for empirical pairs without the Gamma check, given the
/// log normalizers. Used by the likelihood-ratio identity.
double empirical_functional(const EmpiricalPair& pair, const TestPair& test, const std::vector<double>& log_kernel_norm,
                            const std::vector<double>& log_wait_norm);

/// Random Gamma member: phi piecewise linear on 6 random quantile knots with
/// values in [-5,5], c uniform in [0, min(0.9 xi, 10)], M at a random quantile
/// in [0.5, 0.999], H uniform in [-2,2]; rows shifted into Gamma.
TestPair random_gamma_member(const Model& model, Philox& rng);

/// (1-delta) times the log density ratios of the pair against the model,
/// shifted by -delta; requires a pair in Lambda0.
TestPair near_optimizer(const Model& model, const CandidatePair& pair, double delta = 1e-3);

/// max of I_{h,H} over random Gamma members and the near-optimizer.
double variational_lb(const Model& model, const CandidatePair& pair, int n_samples, std::uint64_t seed,
                      double delta = 1e-3);

struct DonskerVaradhan {
  double value = 0.0;
  Vector u;      // optimal u*, normalized to sum 1 on the support of zeta
  Matrix Q;      // optimal flow with row and column sums zeta
  int iterations = 0;
  double residual = 0.0;
};

/// I_DV(zeta) = sup_{u>0} sum_x zeta_x log(u_x / (p u)_x). Entries of zeta
/// equal to 0 are allowed and drop out of the sum. Returns +inf when no flow
/// supported by p has marginals zeta; throws NonConvergence otherwise.
DonskerVaradhan donsker_varadhan(const Kernel& kernel, const Vector& zeta, int max_iterations = 200000,
                                 double tol = 1e-13);

struct I1Options {
  int restarts = 8;
  std::uint64_t seed = 20240601;
  double tol = 1e-9;
  int max_sweeps = 400;
};

/// I1(pi) = inf_zeta I_DV(zeta) + sum_x zeta_x Lambda*_x(pi_x / zeta_x), with
/// terms of states where pi_x = 0 dropped (zeta_x = 0 there).
RateReport rate_I1(const Model& model, const Vector& pi, const I1Options& options = {});

/// Objective of rate_I1 at a given zeta (zeta_x = 0 exactly where pi_x = 0).
double contraction_objective(const Model& model, const Vector& pi, const Vector& zeta);

}  // namespace rldp
