#include "renewal_ldp/wait_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "renewal_ldp/numeric.hpp"

namespace rldp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("wait law parameter '") + what + "' must be finite and > 0");
  }
}

void validate(const WaitLaw::Variant& law) {
  std::visit(Overloaded{
                 [](const Exponential& l) { require_positive(l.rate, "rate"); },
                 [](const GammaLaw& l) {
                   require_positive(l.shape, "shape");
                   require_positive(l.scale, "scale");
                 },
                 [](const Pareto& l) {
                   require_positive(l.index, "index");
                   require_positive(l.scale, "scale");
                 },
                 [](const LogNormal& l) {
                   if (!std::isfinite(l.location)) throw std::invalid_argument("lognormal location must be finite");
                   require_positive(l.scale, "scale");
                 },
                 [](const Weibull& l) {
                   require_positive(l.shape, "shape");
                   require_positive(l.scale, "scale");
                 },
                 [](const Deterministic& l) { require_positive(l.value, "value"); },
                 [](const Mixture& l) {
                   if (l.weights.empty() || l.weights.size() != l.components.size()) {
                     throw std::invalid_argument("mixture needs one weight per component");
                   }
                   double total = 0.0;
                   for (double w : l.weights) {
                     if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be > 0");
                     total += w;
                   }
                   if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
                 },
             },
             law);
}

using Policy = boost::math::policies::policy<boost::math::policies::overflow_error<boost::math::policies::ignore_error>>;

boost::math::gamma_distribution<double, Policy> boost_gamma(const GammaLaw& l) { return {l.shape, l.scale}; }
boost::math::lognormal_distribution<double, Policy> boost_lognormal(const LogNormal& l) {
  return {l.location, l.scale};
}

// Integral of f over [a, +inf[ by double-exponential quadrature.
template <class F>
double integrate_half_line(F f, double a) {
  thread_local boost::math::quadrature::exp_sinh<double> integrator;
  double error = 0.0;
  return integrator.integrate([&](double s) { return f(a + s); }, 0.0, kInf, 1e-13, &error);
}

bool closed_form_mgf(const WaitLaw& law) {
  return std::visit(Overloaded{
                        [](const Exponential&) { return true; },
                        [](const GammaLaw&) { return true; },
                        [](const Deterministic&) { return true; },
                        [](const Weibull& l) { return l.shape == 1.0; },
                        [](const Mixture&) { return true; },
                        [](const auto&) { return false; },
                    },
                    law.variant());
}

// e^x Gamma(a, x) for x > 0 and any real a.
double scaled_upper_gamma(double a, double x) {
  if (x >= 1.0) {
    // Modified Lentz evaluation of the continued fraction.
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
      const double an = -i * (i - a);
      b += 2.0;
      d = an * d + b;
      if (std::abs(d) < tiny) d = tiny;
      c = b + an / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      const double delta = d * c;
      h *= delta;
      if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::pow(x, a) * h;
  }
  if (a > 0.0) return std::exp(x) * boost::math::tgamma(a, x);
  const int k = static_cast<int>(std::ceil(-a));
  double base = a + k;  // in [0, 1)
  double g = base > 0.0 ? std::exp(x) * boost::math::tgamma(base, x) : std::exp(x) * boost::math::expint(1, x);
  // Gamma(b - 1, x) = (Gamma(b, x) - x^{b-1} e^{-x}) / (b - 1)
  for (int i = 0; i < k; ++i) {
    g = (g - std::pow(x, base - 1.0)) / (base - 1.0);
    base -= 1.0;
  }
  return g;
}

// psi(tau^k e^{theta (tau - lo)}) for k in {0, 1}; used for laws without a
// closed-form moment generating function. Shifting by the lower support end
// keeps very negative theta from underflowing.
double shifted_moment(const WaitLaw& law, double theta, int k) {
  const double lo = support_lower(law);
  if (const auto* p = law.as<Pareto>(); p && theta < 0.0) {
    const double x = -theta * p->scale;
    const double a = p->index;
    return k == 0 ? a * std::pow(x, a) * scaled_upper_gamma(-a, x)
                  : a * p->scale * std::pow(x, a - 1.0) * scaled_upper_gamma(1.0 - a, x);
  }
  return integrate_half_line(
      [&](double tau) {
        if (tau <= 0.0) return 0.0;
        const double d = pdf(law, tau);
        if (!(d > 0.0)) return 0.0;
        const double v = std::exp(theta * (tau - lo) + std::log(d) + (k == 0 ? 0.0 : std::log(tau)));
        return std::isfinite(v) ? v : 0.0;
      },
      lo);
}

double atom_mass(const WaitLaw& law, double v) {
  return std::visit(Overloaded{
                        [&](const Deterministic& l) { return l.value == v ? 1.0 : 0.0; },
                        [&](const Mixture& l) {
                          double s = 0.0;
                          for (std::size_t i = 0; i < l.weights.size(); ++i) {
                            s += l.weights[i] * atom_mass(l.components[i], v);
                          }
                          return s;
                        },
                        [](const auto&) { return 0.0; },
                    },
                    law.variant());
}

}  // namespace

bool Mixture::operator==(const Mixture& other) const {
  return weights == other.weights && components == other.components;
}

WaitLaw::WaitLaw(Variant law) : law_(std::move(law)) { validate(law_); }

std::string WaitLaw::family() const {
  return std::visit(Overloaded{
                        [](const Exponential&) { return std::string("exponential"); },
                        [](const GammaLaw&) { return std::string("gamma"); },
                        [](const Pareto&) { return std::string("pareto"); },
                        [](const LogNormal&) { return std::string("lognormal"); },
                        [](const Weibull&) { return std::string("weibull"); },
                        [](const Deterministic&) { return std::string("deterministic"); },
                        [](const Mixture&) { return std::string("mixture"); },
                    },
                    law_);
}

std::string WaitLaw::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const Exponential& l) { os << "Exponential(" << l.rate << ")"; },
                 [&](const GammaLaw& l) { os << "Gamma(" << l.shape << "," << l.scale << ")"; },
                 [&](const Pareto& l) { os << "Pareto(" << l.index << "," << l.scale << ")"; },
                 [&](const LogNormal& l) { os << "LogNormal(" << l.location << "," << l.scale << ")"; },
                 [&](const Weibull& l) { os << "Weibull(" << l.shape << "," << l.scale << ")"; },
                 [&](const Deterministic& l) { os << "Deterministic(" << l.value << ")"; },
                 [&](const Mixture& l) {
                   os << "Mixture(";
                   for (std::size_t i = 0; i < l.weights.size(); ++i) {
                     if (i) os << ",";
                     os << l.weights[i] << "*" << l.components[i].describe();
                   }
                   os << ")";
                 },
             },
             law_);
  return os.str();
}

double pdf(const WaitLaw& law, double tau) {
  return std::visit(Overloaded{
                        [&](const Exponential& l) { return tau < 0 ? 0.0 : l.rate * std::exp(-l.rate * tau); },
                        [&](const GammaLaw& l) {
                          return tau <= 0 ? 0.0 : boost::math::pdf(boost_gamma(l), tau);
                        },
                        [&](const Pareto& l) {
                          return tau < l.scale ? 0.0 : l.index * std::pow(l.scale / tau, l.index) / tau;
                        },
                        [&](const LogNormal& l) {
                          return tau <= 0 ? 0.0 : boost::math::pdf(boost_lognormal(l), tau);
                        },
                        [&](const Weibull& l) {
                          if (tau <= 0) return 0.0;
                          const double z = tau / l.scale;
                          return l.shape / l.scale * std::pow(z, l.shape - 1.0) * std::exp(-std::pow(z, l.shape));
                        },
                        [](const Deterministic&) { return kNaN; },
                        [&](const Mixture& l) {
                          double s = 0.0;
                          for (std::size_t i = 0; i < l.weights.size(); ++i) s += l.weights[i] * pdf(l.components[i], tau);
                          return s;
                        },
                    },
                    law.variant());
}

double survival(const WaitLaw& law, double tau) {
  return std::visit(Overloaded{
                        [&](const Exponential& l) { return tau <= 0 ? 1.0 : std::exp(-l.rate * tau); },
                        [&](const GammaLaw& l) {
                          return tau <= 0 ? 1.0 : boost::math::cdf(boost::math::complement(boost_gamma(l), tau));
                        },
                        [&](const Pareto& l) { return tau <= l.scale ? 1.0 : std::pow(l.scale / tau, l.index); },
                        [&](const LogNormal& l) {
                          return tau <= 0 ? 1.0 : boost::math::cdf(boost::math::complement(boost_lognormal(l), tau));
                        },
                        [&](const Weibull& l) { return tau <= 0 ? 1.0 : std::exp(-std::pow(tau / l.scale, l.shape)); },
                        [&](const Deterministic& l) { return tau < l.value ? 1.0 : 0.0; },
                        [&](const Mixture& l) {
                          double s = 0.0;
                          for (std::size_t i = 0; i < l.weights.size(); ++i) s += l.weights[i] * survival(l.components[i], tau);
                          return s;
                        },
                    },
                    law.variant());
}

double cdf(const WaitLaw& law, double tau) {
  return std::visit(Overloaded{
                        [&](const Exponential& l) { return tau <= 0 ? 0.0 : -std::expm1(-l.rate * tau); },
                        [&](const GammaLaw& l) { return tau <= 0 ? 0.0 : boost::math::cdf(boost_gamma(l), tau); },
                        [&](const Pareto& l) { return tau <= l.scale ? 0.0 : -std::expm1(l.index * std::log(l.scale / tau)); },
                        [&](const LogNormal& l) { return tau <= 0 ? 0.0 : boost::math::cdf(boost_lognormal(l), tau); },
                        [&](const Weibull& l) { return tau <= 0 ? 0.0 : -std::expm1(-std::pow(tau / l.scale, l.shape)); },
                        [&](const Deterministic& l) { return tau < l.value ? 0.0 : 1.0; },
                        [&](const Mixture& l) {
                          double s = 0.0;
                          for (std::size_t i = 0; i < l.weights.size(); ++i) s += l.weights[i] * cdf(l.components[i], tau);
                          return s;
                        },
                    },
                    law.variant());
}

double quantile(const WaitLaw& law, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile level must lie in ]0,1[");
  return std::visit(Overloaded{
                        [&](const Exponential& l) { return -std::log1p(-p) / l.rate; },
                        [&](const GammaLaw& l) { return boost::math::quantile(boost_gamma(l), p); },
                        [&](const Pareto& l) { return l.scale * std::exp(-std::log1p(-p) / l.index); },
                        [&](const LogNormal& l) { return boost::math::quantile(boost_lognormal(l), p); },
                        [&](const Weibull& l) { return l.scale * std::pow(-std::log1p(-p), 1.0 / l.shape); },
                        [&](const Deterministic& l) { return l.value; },
                        [&](const Mixture&) {
                          // Bisection on the mixture cdf between the component quantiles.
                          const auto& m = *law.as<Mixture>();
                          double lo = kInf, hi = 0.0;
                          for (const auto& c : m.components) {
                            lo = std::min(lo, quantile(c, p));
                            hi = std::max(hi, quantile(c, p));
                          }
                          for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
                            const double mid = 0.5 * (lo + hi);
                            (cdf(law, mid) < p ? lo : hi) = mid;
                          }
                          return hi;
                        },
                    },
                    law.variant());
}

double inverse_survival(const WaitLaw& law, double s) {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("survival level must lie in ]0,1[");
  return std::visit(Overloaded{
                        [&](const Exponential& l) { return -std::log(s) / l.rate; },
                        [&](const GammaLaw& l) { return boost::math::quantile(boost::math::complement(boost_gamma(l), s)); },
                        [&](const Pareto& l) { return l.scale * std::exp(-std::log(s) / l.index); },
                        [&](const LogNormal& l) {
                          return boost::math::quantile(boost::math::complement(boost_lognormal(l), s));
                        },
                        [&](const Weibull& l) { return l.scale * std::pow(-std::log(s), 1.0 / l.shape); },
                        [&](const Deterministic& l) { return l.value; },
                        [&](const Mixture& m) {
                          double lo = kInf, hi = 0.0;
                          for (const auto& c : m.components) {
                            lo = std::min(lo, inverse_survival(c, s));
                            hi = std::max(hi, inverse_survival(c, s));
                          }
                          for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
                            const double mid = 0.5 * (lo + hi);
                            (survival(law, mid) > s ? lo : hi) = mid;
                          }
                          return hi;
                        },
                    },
                    law.variant());
}

double support_lower(const WaitLaw& law) {
  return std::visit(Overloaded{
                        [](const Pareto& l) { return l.scale; },
                        [](const Deterministic& l) { return l.value; },
                        [](const Mixture& l) {
                          double lo = kInf;
                          for (const auto& c : l.components) lo = std::min(lo, support_lower(c));
                          return lo;
                        },
                        [](const auto&) { return 0.0; },
                    },
                    law.variant());
}

double support_upper(const WaitLaw& law) {
  return std::visit(Overloaded{
                        [](const Deterministic& l) { return l.value; },
                        [](const Mixture& l) {
                          double hi = 0.0;
                          for (const auto& c : l.components) hi = std::max(hi, support_upper(c));
                          return hi;
                        },
                        [](const auto&) { return kInf; },
                    },
                    law.variant());
}

bool has_lebesgue_density(const WaitLaw& law) {
  return std::visit(Overloaded{
                        [](const Deterministic&) { return false; },
                        [](const Mixture& l) {
                          return std::all_of(l.components.begin(), l.components.end(), has_lebesgue_density);
                        },
                        [](const auto&) { return true; },
                    },
                    law.variant());
}

double mean_wait(const WaitLaw& law) {
  return std::visit(Overloaded{
                        [](const Exponential& l) { return 1.0 / l.rate; },
                        [](const GammaLaw& l) { return l.shape * l.scale; },
                        [](const Pareto& l) { return l.index > 1.0 ? l.index * l.scale / (l.index - 1.0) : kInf; },
                        [](const LogNormal& l) { return std::exp(l.location + 0.5 * l.scale * l.scale); },
                        [](const Weibull& l) { return l.scale * std::tgamma(1.0 + 1.0 / l.shape); },
                        [](const Deterministic& l) { return l.value; },
                        [](const Mixture& l) {
                          double s = 0.0;
                          for (std::size_t i = 0; i < l.weights.size(); ++i) s += l.weights[i] * mean_wait(l.components[i]);
                          return s;
                        },
                    },
                    law.variant());
}

double mgf_abscissa(const WaitLaw& law) {
  return std::visit(Overloaded{
                        [](const Exponential& l) { return l.rate; },
                        [](const GammaLaw& l) { return 1.0 / l.scale; },
                        [](const Pareto&) { return 0.0; },
                        [](const LogNormal&) { return 0.0; },
                        [](const Weibull& l) {
                          if (l.shape < 1.0) return 0.0;
                          if (l.shape == 1.0) return 1.0 / l.scale;
                          return kInf;
                        },
                        [](const Deterministic&) { return kInf; },
                        [](const Mixture& l) {
                          double xi = kInf;
                          for (const auto& c : l.components) xi = std::min(xi, mgf_abscissa(c));
                          return xi;
                        },
                    },
                    law.variant());
}

double log_mgf(const WaitLaw& law, double theta) {
  if (theta == 0.0) return 0.0;
  const double xi = mgf_abscissa(law);
  if (std::isfinite(xi) && theta >= xi) return kInf;
  return std::visit(Overloaded{
                        [&](const Exponential& l) { return -std::log1p(-theta / l.rate); },
                        [&](const GammaLaw& l) { return -l.shape * std::log1p(-l.scale * theta); },
                        [&](const Deterministic& l) { return theta * l.value; },
                        [&](const Weibull& l) {
                          if (l.shape == 1.0) return -std::log1p(-theta * l.scale);
                          return theta * support_lower(law) + std::log(shifted_moment(law, theta, 0));
                        },
                        [&](const Mixture& l) {
                          std::vector<double> terms(l.weights.size());
                          for (std::size_t i = 0; i < terms.size(); ++i) {
                            terms[i] = std::log(l.weights[i]) + log_mgf(l.components[i], theta);
                          }
                          return log_sum_exp(terms);
                        },
                        [&](const auto&) {
                          return theta * support_lower(law) + std::log(shifted_moment(law, theta, 0));
                        },
                    },
                    law.variant());
}

double log_mgf_derivative(const WaitLaw& law, double theta) {
  const double xi = mgf_abscissa(law);
  if (std::isfinite(xi) && theta >= xi && !(theta == 0.0 && xi == 0.0)) return kInf;
  if (theta == 0.0) return mean_wait(law);
  return std::visit(Overloaded{
                        [&](const Exponential& l) { return 1.0 / (l.rate - theta); },
                        [&](const GammaLaw& l) { return l.shape * l.scale / (1.0 - l.scale * theta); },
                        [&](const Deterministic& l) { return l.value; },
                        [&](const Mixture& l) {
                          // Weighted by the tilted component masses w_i e^{Lambda_i}.
                          std::vector<double> logs(l.weights.size());
                          for (std::size_t i = 0; i < logs.size(); ++i) {
                            logs[i] = std::log(l.weights[i]) + log_mgf(l.components[i], theta);
                          }
                          const double norm = log_sum_exp(logs);
                          double s = 0.0;
                          for (std::size_t i = 0; i < logs.size(); ++i) {
                            s += std::exp(logs[i] - norm) * log_mgf_derivative(l.components[i], theta);
                          }
                          return s;
                        },
                        [&](const auto&) {
                          if (const auto* w = law.as<Weibull>(); w && w->shape == 1.0) {
                            return w->scale / (1.0 - w->scale * theta);
                          }
                          return shifted_moment(law, theta, 1) / shifted_moment(law, theta, 0);
                        },
                    },
                    law.variant());
}

double legendre(const WaitLaw& law, double m) {
  if (std::isnan(m)) return kNaN;
  if (const auto* d = law.as<Deterministic>()) return m == d->value ? 0.0 : kInf;

  const double lo = support_lower(law);
  const double hi = support_upper(law);
  if (m < lo || m > hi) return kInf;
  if (m == lo || m == hi) {
    const double atom = atom_mass(law, m);
    return atom > 0.0 ? -std::log(atom) : kInf;
  }

  const double mean = mean_wait(law);
  const double xi = mgf_abscissa(law);
  if (m == mean) return 0.0;

  auto objective = [&](double theta) { return theta * m - log_mgf(law, theta); };
  auto excess = [&](double theta) { return log_mgf_derivative(law, theta) - m; };

  double a = 0.0, b = 0.0;  // root of excess bracketed by [a, b]
  if (std::isfinite(mean) && m > mean) {
    // Maximizer is at theta >= 0; for xi = 0 the supremum is attained at 0.
    if (xi == 0.0) return 0.0;
    if (std::isfinite(xi)) {
      double top = 0.0;
      bool found = false;
      for (int k = 1; k <= 60; ++k) {
        top = xi * (1.0 - std::ldexp(1.0, -k));
        if (excess(top) >= 0.0) {
          found = true;
          break;
        }
        a = top;
      }
      if (!found) return std::max(0.0, objective(top));
      b = top;
    } else {
      b = 1.0;
      while (excess(b) < 0.0) {
        a = b;
        b *= 2.0;
        if (b > 1e300) return kInf;
      }
    }
  } else {
    a = -1.0;
    while (excess(a) > 0.0) {
      b = a;
      a *= 2.0;
      if (a < -1e300) return kInf;
    }
  }

  const double fa = excess(a);
  const double fb = excess(b);
  if (fa == 0.0) return std::max(0.0, objective(a));
  if (fb == 0.0 || !(fa < 0.0 && fb > 0.0)) return std::max(0.0, objective(b));
  std::uintmax_t iterations = 200;
  const auto root = boost::math::tools::toms748_solve(
      excess, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(50), iterations);
  return std::max(0.0, objective(0.5 * (root.first + root.second)));
}

double partial_expectation_above(const WaitLaw& law, double t) {
  if (t <= support_lower(law) && !law.as<Deterministic>()) return mean_wait(law);
  return std::visit(Overloaded{
                        [&](const Exponential& l) { return (t + 1.0 / l.rate) * std::exp(-l.rate * t); },
                        [&](const GammaLaw& l) { return l.shape * l.scale * boost::math::gamma_q(l.shape + 1.0, t / l.scale); },
                        [&](const Pareto& l) {
                          if (l.index <= 1.0) return kInf;
                          return l.index * std::pow(l.scale, l.index) * std::pow(t, 1.0 - l.index) / (l.index - 1.0);
                        },
                        [&](const LogNormal& l) {
                          const double s2 = l.scale * l.scale;
                          return std::exp(l.location + 0.5 * s2) *
                                 0.5 * std::erfc((std::log(t) - l.location - s2) / (l.scale * std::sqrt(2.0)));
                        },
                        [&](const Weibull& l) {
                          const double a = 1.0 + 1.0 / l.shape;
                          return l.scale * std::tgamma(a) * boost::math::gamma_q(a, std::pow(t / l.scale, l.shape));
                        },
                        [&](const Deterministic& l) { return l.value > t ? l.value : 0.0; },
                        [&](const Mixture& l) {
                          double s = 0.0;
                          for (std::size_t i = 0; i < l.weights.size(); ++i) {
                            s += l.weights[i] * partial_expectation_above(l.components[i], t);
                          }
                          return s;
                        },
                    },
                    law.variant());
}

double sample(const WaitLaw& law, Philox& rng) {
  return std::visit(Overloaded{
                        [&](const Exponential& l) { return -std::log(uniform_open01(rng)) / l.rate; },
                        [&](const GammaLaw& l) {
                          std::gamma_distribution<double> dist(l.shape, l.scale);
                          double v = 0.0;
                          do {
                            v = dist(rng);
                          } while (!(v > 0.0));
                          return v;
                        },
                        [&](const Pareto& l) { return l.scale * std::pow(uniform_open01(rng), -1.0 / l.index); },
                        [&](const LogNormal& l) {
                          const double z = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * uniform_open01(rng));
                          return std::exp(l.location + l.scale * z);
                        },
                        [&](const Weibull& l) { return l.scale * std::pow(-std::log(uniform_open01(rng)), 1.0 / l.shape); },
                        [&](const Deterministic& l) { return l.value; },
                        [&](const Mixture& l) {
                          const double u = uniform_open01(rng);
                          double acc = 0.0;
                          for (std::size_t i = 0; i + 1 < l.weights.size(); ++i) {
                            acc += l.weights[i];
                            if (u < acc) return sample(l.components[i], rng);
                          }
                          return sample(l.components.back(), rng);
                        },
                    },
                    law.variant());
}

bool has_exponential_conjugate(const WaitLaw& law) {
  return std::visit(Overloaded{
                        [](const Mixture& l) {
                          return std::all_of(l.components.begin(), l.components.end(), has_exponential_conjugate);
                        },
                        [&](const auto&) { return closed_form_mgf(law); },
                    },
                    law.variant());
}

WaitLaw exponential_tilt(const WaitLaw& law, double c) {
  if (!has_exponential_conjugate(law)) {
    throw std::invalid_argument("no closed-form exponential tilt for " + law.describe());
  }
  if (c == 0.0) return law;
  const double xi = mgf_abscissa(law);
  if (std::isfinite(xi) && c >= xi) throw std::invalid_argument("exponential tilt beyond the mgf abscissa");
  return std::visit(Overloaded{
                        [&](const Exponential& l) { return WaitLaw(Exponential{l.rate - c}); },
                        [&](const GammaLaw& l) { return WaitLaw(GammaLaw{l.shape, l.scale / (1.0 - l.scale * c)}); },
                        [&](const Weibull& l) { return WaitLaw(Exponential{1.0 / l.scale - c}); },
                        [&](const Deterministic&) { return law; },
                        [&](const Mixture& l) {
                          std::vector<double> logs(l.weights.size());
                          for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = std::log(l.weights[i]) + log_mgf(l.components[i], c);
                          const double norm = log_sum_exp(logs);
                          Mixture out;
                          double total = 0.0;
                          for (std::size_t i = 0; i < logs.size(); ++i) {
                            out.weights.push_back(std::exp(logs[i] - norm));
                            total += out.weights.back();
                            out.components.push_back(exponential_tilt(l.components[i], c));
                          }
                          for (double& w : out.weights) w /= total;
                          return WaitLaw(std::move(out));
                        },
                        [&](const auto&) -> WaitLaw { throw std::logic_error("unreachable"); },
                    },
                    law.variant());
}

}  // namespace rldp
