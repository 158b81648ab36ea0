#pragma once

// Closed-form minimizers of the per-coordinate surrogate models
//
//   quadratic:  g(dx) = a dx + 1/2 L2 dx^2                (+ lambda1 |c + dx|)
//   cubic:      h(dx) = a dx + 1/2 b dx^2 + 1/6 L3 |dx|^3 (+ lambda1 |d + dx|)
//
// where a and b are the first and second derivative at the current
// coefficient value. All functions are pure.

namespace fastsurv {

struct QuadStepInput {
  double a = 0.0;        // f'(x)
  double b = 0.0;        // curvature bound L2 (plus 2 lambda2 after absorption)
  double c = 0.0;        // current coefficient x
  double lambda1 = 0.0;
};

struct CubicStepInput {
  double a = 0.0;        // f'(x)
  double b = 0.0;        // f''(x) >= 0
  double c = 0.0;        // L3 >= 0
  double d = 0.0;        // current coefficient x
  double lambda1 = 0.0;
};

/// -a / l2. Zero when a == 0; throws DegenerateCurvatureError for l2 == 0, a != 0.
double quad_step(double a, double l2);

/// sgn(a) (b - sqrt(b^2 + 2 l3 |a|)) / l3, evaluated as -2a / (b + sqrt(b^2 + 2 l3 |a|))
/// so that l3 -> 0 reduces to -a / b.
double cubic_step(double a, double b, double l3);

/// Soft-thresholded quadratic step; branch boundaries go to dx = -c.
double quad_step_l1(const QuadStepInput& in);

/// Soft-thresholded cubic step with sgn(0) = +1; branch boundaries go to dx = -d.
double cubic_step_l1(const CubicStepInput& in);

struct AbsorbedSlope {
  double a = 0.0;
  double b = 0.0;
};

/// Folds lambda2 x^2 into the surrogate: (a + 2 lambda2 x, b + 2 lambda2).
AbsorbedSlope elasticnet_absorb(double a, double b, double lambda2, double x);

}  // namespace fastsurv
