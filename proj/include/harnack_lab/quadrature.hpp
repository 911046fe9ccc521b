#pragma once

#include <functional>

namespace hlab {

/// Integral of f over (a, b) by double-exponential quadrature. Integrable
/// endpoint singularities are fine; f is never evaluated at a or b. Write a singular
/// factor in the distance to its endpoint (u rather than 1 - t near t = 1), since
/// doubles near 1 cannot resolve the tail.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

/// Closed-form integral of (1-t)^e over [ta, tb] with tb <= 1; +inf when divergent at t = 1.
double power_integral_1mt(double e, double ta, double tb);

}  // namespace hlab
