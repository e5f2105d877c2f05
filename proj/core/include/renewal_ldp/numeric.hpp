#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace rldp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// log(sum(exp(v))) without overflow; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values);

struct GaussLegendreRule {
  std::vector<double> nodes;    // ascending in ]-1,1[
  std::vector<double> weights;  // sum to 2
};

/// n-point Gauss-Legendre rule on [-1,1] via Newton iteration on P_n.
GaussLegendreRule gauss_legendre(int n);

/// Minimizer of a unimodal function on [lo, hi] by golden-section search.
struct ScalarMinimum {
  double argmin;
  double value;
};
ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol,
                                      int max_iter = 500);

double median(std::vector<double> values);

}  // namespace rldp
