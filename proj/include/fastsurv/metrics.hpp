#pragma once

#include "fastsurv/cph.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fastsurv {

/// Harrell's C: over pairs with t_i < t_j and event_i = 1, the fraction with
/// risk_i > risk_j; tied risks count 1/2, tied times are not comparable.
/// Throws UndefinedMetricError when there is no comparable pair. O(n log n).
double concordance_index(std::span<const double> times, std::span<const double> events,
                         std::span<const double> risk_scores);
double concordance_index(const Vector& times, const Vector& events, const Vector& risk_scores);

/// Breslow cumulative baseline hazard, a right-continuous step function.
///
/// Values are stored relative to exp(stabilizer) so that they stay finite:
/// H0(t) = relative(t) * exp(-stabilizer).
struct BaselineHazard {
  std::vector<double> times;       // distinct event times, increasing
  std::vector<double> cumulative;  // relative H0 at each time
  double stabilizer = 0.0;

  double relative_at(double t) const;
  double at(double t) const;
};

BaselineHazard breslow_baseline(const SortedSurvivalDataset& data, const Vector& beta);

/// survival(i, k) = S_i(time_grid[k]) = exp(-H0(t_k) exp(eta_i)).
struct SurvivalFunctionEstimate {
  std::vector<double> time_grid;
  Matrix survival;
};

/// `eta` is the linear predictor of the samples to predict, in any order.
SurvivalFunctionEstimate predict_survival(const BaselineHazard& baseline, const Vector& eta,
                                          std::span<const double> time_grid);

/// Kaplan-Meier estimate of the censoring survival G(t) = P(C > t); the
/// number at risk at s counts every sample with time >= s.
struct CensoringSurvival {
  std::vector<double> times;  // distinct censoring times, increasing
  std::vector<double> values; // G just after each time

  double at(double t) const;
  /// G(t-), the left limit.
  double before(double t) const;
};

CensoringSurvival censoring_kaplan_meier(const Vector& times, const Vector& events);

struct IbsResult {
  double value = 0.0;
  std::vector<double> grid;   // grid actually used
  std::vector<double> brier;  // Brier score at each grid point
  bool truncated = false;
  std::string warning;
};

/// 100 equally spaced points between the 1st and 99th percentile of `times`.
std::vector<double> default_time_grid(const Vector& times, std::size_t points = 100);

/// Inverse-probability-of-censoring-weighted Brier score averaged over the
/// grid by the trapezoid rule (divided by the grid span). Grid points where
/// the censoring survival is 0 are dropped and `truncated` is set; throws
/// UndefinedMetricError when no grid point remains.
IbsResult integrated_brier_score(const CensoringSurvival& censoring, const Vector& test_times,
                                 const Vector& test_events, const SurvivalFunctionEstimate& predicted);

/// Breslow baseline and censoring distribution from `train`, predictions for `test`.
IbsResult integrated_brier_score(const SortedSurvivalDataset& train, const SurvivalDataset& test,
                                 const Vector& beta, std::span<const double> time_grid);

struct RecoveryScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision and recall of supp(beta_hat) against supp(beta_star) using the
/// intersection of the supports. Empty supp(beta_hat) gives precision 0.
RecoveryScores support_recovery(const Vector& beta_hat, const Vector& beta_star);
RecoveryScores support_recovery(std::span<const std::size_t> estimated,
                                std::span<const std::size_t> truth);

struct EvaluationMetrics {
  double cph_loss = 0.0;
  std::optional<double> cindex;
  std::optional<double> ibs;
  std::vector<std::string> warnings;
};

/// Loss, C-index and IBS (default grid) of `beta` on `eval`, with baseline
/// hazard and censoring distribution estimated on `train`.
EvaluationMetrics evaluate_model(const SortedSurvivalDataset& train, const SortedSurvivalDataset& eval,
                                 const Vector& beta);

}  // namespace fastsurv
