#include "harnack_lab/quadrature.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hlab {

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, a, b, tol);
}

double power_integral_1mt(double e, double ta, double tb) {
  if (tb > 1.0 || ta > tb) throw std::invalid_argument("power_integral_1mt: need ta <= tb <= 1");
  if (ta == tb) return 0.0;
  const double ua = 1.0 - ta, ub = 1.0 - tb;
  if (e == -1.0) {
    if (ub == 0.0) return std::numeric_limits<double>::infinity();
    return std::log(ua / ub);
  }
  const double e1 = e + 1.0;
  if (ub == 0.0 && e1 <= 0.0) return std::numeric_limits<double>::infinity();
  return (std::pow(ua, e1) - std::pow(ub, e1)) / e1;
}

}  // namespace hlab
