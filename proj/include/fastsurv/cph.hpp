#pragma once

#include "fastsurv/survival_data.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>

namespace fastsurv {

/// Linear predictor eta = X beta in sorted order, with cached
/// overflow-safe weights exp(eta - stabilizer).
///
/// `version` increases with every mutation so derivative results can be tied
/// to the eta they were computed from.
struct LinearPredictor {
  Vector eta;
  Vector weights;
  double stabilizer = 0.0;
  std::uint64_t version = 0;
};

/// Reverse (risk-set prefix) cumulative sums for one feature, one entry per
/// sorted position. Rows in the same tie group share identical values.
struct RiskSetCumulants {
  Vector s0;
  Vector s1;
  Vector s2;
  Vector s3;
};

/// Single-coordinate derivatives of the loss.
struct CoordinateDerivatives {
  double d1 = 0.0;
  double d2 = 0.0;
  std::optional<double> d3;
  std::size_t feature = 0;
  std::uint64_t eta_version = 0;
};

/// Per-feature bounds on |d2| (l2) and |d3| (l3). They depend only on the
/// data, never on beta.
struct LipschitzTable {
  Vector l2;
  Vector l3;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

LinearPredictor compute_eta(const SortedSurvivalDataset& data, const Vector& beta);

/// eta += delta_beta * X[:, feature], refreshing stabilizer and weights.
void update_eta(LinearPredictor& eta, const SortedSurvivalDataset& data, std::size_t feature,
                double delta_beta);

/// Wraps an eta vector (sorted order) into a LinearPredictor.
LinearPredictor make_linear_predictor(Vector eta);

/// Negative log partial likelihood with Breslow ties, O(n).
double cph_loss(const SortedSurvivalDataset& data, const LinearPredictor& eta);

RiskSetCumulants risk_set_cumulants(const SortedSurvivalDataset& data, const LinearPredictor& eta,
                                    std::size_t feature);

/// First, second and (order == 3) third partial derivative of the loss with
/// respect to beta[feature], in one O(n) pass.
CoordinateDerivatives coordinate_partials(const SortedSurvivalDataset& data,
                                          const LinearPredictor& eta, std::size_t feature,
                                          int order);

/// r-th central moment of X[:, feature] over the risk set of the event at
/// sorted position `event_position`, under softmax(eta) weights.
double central_moment(const SortedSurvivalDataset& data, const LinearPredictor& eta,
                      std::size_t feature, int r, std::size_t event_position);

/// l2 = 1/4 sum_i delta_i range_i^2, l3 = 1/(6 sqrt 3) sum_i delta_i range_i^3,
/// where range_i is max - min of the feature over R_i. O(np).
LipschitzTable lipschitz_constants(const SortedSurvivalDataset& data);

/// Gradient of the loss in eta-space (sorted order), O(n).
Vector eta_gradient(const SortedSurvivalDataset& data, const LinearPredictor& eta);

/// X^T eta_gradient, O(np).
Vector full_beta_gradient(const SortedSurvivalDataset& data, const LinearPredictor& eta);

/// Diagonal of the eta-space Hessian, O(n).
Vector eta_hessian_diagonal(const SortedSurvivalDataset& data, const LinearPredictor& eta);

/// Diagonal upper bound diag(eta_gradient + delta) on the eta-space Hessian.
Vector eta_hessian_upper_diagonal(const SortedSurvivalDataset& data, const LinearPredictor& eta);

/// Exact beta-space Hessian X^T (d^2 loss / d eta^2) X, built as
/// X^T diag(w * c) X - sum_i delta_i mu_i mu_i^T in O(n p^2).
Matrix beta_hessian(const SortedSurvivalDataset& data, const LinearPredictor& eta);

}  // namespace fastsurv
