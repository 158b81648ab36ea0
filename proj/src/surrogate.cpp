#include "fastsurv/surrogate.hpp"

#include "fastsurv/errors.hpp"

#include <cmath>
#include <string>

namespace fastsurv {

namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("surrogate input '") + what + "' is not finite");
}

// Root of a + b dx + 1/2 c dx |dx| = target. The left side is strictly
// increasing when b > 0 or c > 0; the rationalized form avoids cancellation
// and degrades to (target - a) / b as c -> 0.
double solve_smooth_part(double a, double b, double c, double target) {
  const double r = target - a;
  if (r == 0.0) return 0.0;
  return 2.0 * r / (b + std::sqrt(b * b + 2.0 * c * std::abs(r)));
}

}  // namespace

double quad_step(double a, double l2) {
  check_finite(a, "a");
  check_finite(l2, "L2");
  if (a == 0.0) return 0.0;
  if (!(l2 > 0.0)) throw DegenerateCurvatureError("quadratic step with zero curvature and nonzero slope");
  return -a / l2;
}

double cubic_step(double a, double b, double l3) {
  check_finite(a, "a");
  check_finite(b, "b");
  check_finite(l3, "L3");
  if (a == 0.0) return 0.0;
  if (b < 0.0 || l3 < 0.0) throw NumericError("cubic step requires b >= 0 and L3 >= 0");
  if (b == 0.0 && l3 == 0.0) {
    throw DegenerateCurvatureError("cubic step with zero curvature and nonzero slope");
  }
  return -2.0 * a / (b + std::sqrt(b * b + 2.0 * l3 * std::abs(a)));
}

double quad_step_l1(const QuadStepInput& in) {
  check_finite(in.a, "a");
  check_finite(in.b, "b");
  check_finite(in.c, "c");
  check_finite(in.lambda1, "lambda1");
  if (in.lambda1 < 0.0) throw NumericError("lambda1 must be nonnegative");
  if (in.lambda1 == 0.0) return quad_step(in.a, in.b);
  if (!(in.b > 0.0)) {
    // Linear objective a dx + lambda1 |c + dx|: bounded only when |a| <= lambda1.
    if (std::abs(in.a) <= in.lambda1) return -in.c;
    throw DegenerateCurvatureError("quadratic l1 step with zero curvature and |a| > lambda1");
  }
  const double slack = in.b * in.c - in.a;
  if (slack < -in.lambda1) return -(in.a - in.lambda1) / in.b;
  if (slack > in.lambda1) return -(in.a + in.lambda1) / in.b;
  return -in.c;
}

double cubic_step_l1(const CubicStepInput& in) {
  check_finite(in.a, "a");
  check_finite(in.b, "b");
  check_finite(in.c, "c");
  check_finite(in.d, "d");
  check_finite(in.lambda1, "lambda1");
  if (in.lambda1 < 0.0) throw NumericError("lambda1 must be nonnegative");
  if (in.b < 0.0 || in.c < 0.0) throw NumericError("cubic step requires b >= 0 and L3 >= 0");
  if (in.lambda1 == 0.0) return cubic_step(in.a, in.b, in.c);
  if (in.b == 0.0 && in.c == 0.0) {
    if (std::abs(in.a) <= in.lambda1) return -in.d;
    throw DegenerateCurvatureError("cubic l1 step with zero curvature and |a| > lambda1");
  }

  const double sign = in.d >= 0.0 ? 1.0 : -1.0;
  // sgn(d) times the smooth part's slope at dx = -d.
  const double kink_slope = sign * (in.a - in.b * in.d) - 0.5 * in.c * in.d * in.d;

  // Minimizer on the far side of 0 from -d: the sign of (d + dx) is sgn(d)
  // and the slope condition is a + b dx + 1/2 c dx|dx| = -sgn(d) lambda1.
  if (sign * in.a + in.lambda1 <= 0.0) {
    return solve_smooth_part(in.a, in.b, in.c, -sign * in.lambda1);
  }
  // Crosses the kink: d + dx has sign opposite to d.
  if (kink_slope > in.lambda1) {
    return solve_smooth_part(in.a, in.b, in.c, sign * in.lambda1);
  }
  // Stops between 0 and -d, still on d's side of the kink.
  if (kink_slope < -in.lambda1) {
    return solve_smooth_part(in.a, in.b, in.c, -sign * in.lambda1);
  }
  return -in.d;
}

AbsorbedSlope elasticnet_absorb(double a, double b, double lambda2, double x) {
  if (lambda2 < 0.0) throw NumericError("lambda2 must be nonnegative");
  return {a + 2.0 * lambda2 * x, b + 2.0 * lambda2};
}

}  // namespace fastsurv
