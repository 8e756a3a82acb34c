#ifndef COINFER_QUADRATURE_HPP
#define COINFER_QUADRATURE_HPP

#include <cmath>
#include <exception>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "coinfer/error.hpp"

namespace coinfer {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  unsigned max_depth = 20;   // bisection levels of the adaptive rule
  double tail_mass = 1e-12;  // semi-infinite supports are cut where the tail mass drops below this
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

inline bool within_tolerance(const QuadratureResult& r, const QuadratureOptions& opts) {
  return std::isfinite(r.value) && r.error <= std::fmax(opts.abs_tol, opts.rel_tol * std::fabs(r.value));
}

inline void require_converged(const QuadratureResult& r, const QuadratureOptions& opts,
                              const char* what) {
  if (!within_tolerance(r, opts))
    throw numerical_failure(std::string(what) + ": quadrature did not converge", r.value, r.error);
}

}  // namespace detail

/// Adaptive 61-point Gauss-Kronrod on a finite interval [a, b].
template <class F>
QuadratureResult integrate_finite(F&& f, double a, double b, const QuadratureOptions& opts) {
  QuadratureResult r;
  if (!(b > a)) return r;
  try {
    r.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, a, b, opts.max_depth, opts.rel_tol * 1e-2, &r.error);
  } catch (const std::exception& e) {
    throw numerical_failure(std::string("gauss-kronrod: ") + e.what(), r.value, INFINITY);
  }
  return r;
}

/// Integral of f over [a, b] with 0 < a, evaluated in u = ln(x). Integrands
/// that grow like 1/x near a small lower limit become flat in u.
template <class F>
QuadratureResult integrate_log_domain(F&& f, double a, double b, const QuadratureOptions& opts) {
  if (!(b > a)) return {};
  auto g = [&f](double u) {
    const double x = std::exp(u);
    return f(x) * x;
  };
  return integrate_finite(g, std::log(a), std::log(b), opts);
}

/// Integral over [0, b] of an integrand that may be singular at 0.
template <class F>
QuadratureResult integrate_from_zero(F&& f, double b, const QuadratureOptions& opts) {
  QuadratureResult r;
  if (!(b > 0.0)) return r;
  try {
    boost::math::quadrature::tanh_sinh<double> ts(15);
    double l1 = 0.0;
    std::size_t levels = 0;
    r.value = ts.integrate(f, 0.0, b, opts.rel_tol * 1e-2, &r.error, &l1, &levels);
  } catch (const std::exception& e) {
    throw numerical_failure(std::string("tanh-sinh: ") + e.what(), r.value, INFINITY);
  }
  return r;
}

}  // namespace coinfer

#endif  // COINFER_QUADRATURE_HPP
