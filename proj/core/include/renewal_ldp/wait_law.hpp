#pragma once

#include <string>
#include <variant>
#include <vector>

#include "renewal_ldp/rng.hpp"

namespace rldp {

struct Exponential {
  double rate;
  bool operator==(const Exponential&) const = default;
};

struct GammaLaw {
  double shape;
  double scale;
  bool operator==(const GammaLaw&) const = default;
};

/// Pareto type I: density index * scale^index / tau^(index+1) on [scale, inf[.
struct Pareto {
  double index;
  double scale;
  bool operator==(const Pareto&) const = default;
};

/// log(tau) ~ Normal(location, scale^2).
struct LogNormal {
  double location;
  double scale;
  bool operator==(const LogNormal&) const = default;
};

struct Weibull {
  double shape;
  double scale;
  bool operator==(const Weibull&) const = default;
};

struct Deterministic {
  double value;
  bool operator==(const Deterministic&) const = default;
};

class WaitLaw;

struct Mixture {
  std::vector<double> weights;
  std::vector<WaitLaw> components;
  bool operator==(const Mixture&) const;
};

/// Holding-time law psi_x on ]0,+inf[. Immutable after construction; the
/// constructor rejects non-positive parameters and unnormalized mixtures.
class WaitLaw {
 public:
  using Variant = std::variant<Exponential, GammaLaw, Pareto, LogNormal, Weibull, Deterministic, Mixture>;

  WaitLaw(Variant law);  // NOLINT(google-explicit-constructor)

  const Variant& variant() const noexcept { return law_; }
  template <class T>
  const T* as() const noexcept {
    return std::get_if<T>(&law_);
  }

  std::string family() const;
  std::string describe() const;

  bool operator==(const WaitLaw&) const = default;

 private:
  Variant law_;
};

/// Density against Lebesgue measure. Deterministic laws (and mixtures that
/// contain one) have no Lebesgue density; those return NaN.
double pdf(const WaitLaw& law, double tau);
double cdf(const WaitLaw& law, double tau);
double survival(const WaitLaw& law, double tau);
double quantile(const WaitLaw& law, double p);
/// Smallest tau with survival(tau) <= s; accurate for s near 0.
double inverse_survival(const WaitLaw& law, double s);

/// Infimum and supremum of the support.
double support_lower(const WaitLaw& law);
double support_upper(const WaitLaw& law);
bool has_lebesgue_density(const WaitLaw& law);

double mean_wait(const WaitLaw& law);

/// xi = sup{c >= 0 : psi(e^{c tau}) < inf}, closed form per family.
double mgf_abscissa(const WaitLaw& law);

/// Lambda(theta) = log psi(e^{theta tau}); +inf outside the finiteness domain.
double log_mgf(const WaitLaw& law, double theta);

/// Lambda'(theta) = psi(tau e^{theta tau}) / psi(e^{theta tau}).
double log_mgf_derivative(const WaitLaw& law, double theta);

/// Lambda*(m) = sup_theta (theta m - Lambda(theta)) in [0,+inf].
double legendre(const WaitLaw& law, double m);

/// E[tau ; tau > threshold]; +inf when the tail mean diverges.
double partial_expectation_above(const WaitLaw& law, double threshold);

double sample(const WaitLaw& law, Philox& rng);

/// True when e^{c tau} psi(d tau) / psi(e^{c tau}) stays in the same family.
bool has_exponential_conjugate(const WaitLaw& law);

/// The law e^{c tau} psi(d tau) / psi(e^{c tau}); requires c < xi and a
/// conjugate family.
WaitLaw exponential_tilt(const WaitLaw& law, double c);

}  // namespace rldp
