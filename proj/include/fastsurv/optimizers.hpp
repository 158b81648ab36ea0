#pragma once

#include "fastsurv/cph.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fastsurv {

enum class Method { QuadCd, CubicCd, ExactNewton, QuasiNewton, ProxNewton };

std::string_view to_string(Method method);
/// Accepts quad_cd, cubic_cd, exact_newton, quasi_newton, prox_newton.
Method parse_method(std::string_view name);
bool is_coordinate_descent(Method method);

/// Training configuration. One trace "iteration" is a full coordinate sweep
/// for quad_cd / cubic_cd and one outer Newton step for the baselines.
struct FitConfig {
  Method method = Method::QuadCd;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int max_sweeps = 1000;
  double tol = 1e-7;
  bool assert_monotone = false;
  bool trace = true;
  /// Inner coordinate passes over the quadratic model of quasi/prox Newton.
  int inner_max_passes = 50;
  double inner_tol = 1e-8;
  /// Recompute eta from beta every this many sweeps.
  int eta_refresh_every = 50;
};

/// Throws UsageError for invalid combinations (e.g. exact_newton with lambda1 > 0).
void validate_config(const FitConfig& config);

struct TracePoint {
  int iteration = 0;
  double loss = 0.0;
  double objective = 0.0;
  double elapsed_seconds = 0.0;
};

struct FitResult {
  Vector beta;
  double final_loss = 0.0;       // unpenalized
  double final_objective = 0.0;  // loss + lambda1 |beta|_1 + lambda2 |beta|_2^2
  std::vector<TracePoint> loss_trace;
  int sweeps_used = 0;
  bool converged = false;
  bool diverged = false;
  /// exact_newton fell back to a least-squares solve at least once.
  bool singular_hessian = false;
  /// Filled when assert_monotone is set: per-update checks.
  std::size_t monotone_checks = 0;
  std::size_t monotone_violations = 0;
  double max_objective_increase = 0.0;
};

/// Slack allowed when checking per-update monotone descent.
inline constexpr double kMonotoneSlack = 1e-10;

double penalized_objective(double loss, const Vector& beta, double lambda1, double lambda2);

/// Converged iff the largest coefficient change of the last sweep and the
/// relative objective decrease are both <= tol.
bool check_convergence(double beta_change_inf_norm, double sweep_loss_decrease, double tol);

/// Trains from beta = 0.
FitResult fit(const SortedSurvivalDataset& data, const FitConfig& config);
/// Trains from a given starting point (used by fine-tuning and tests).
FitResult fit(const SortedSurvivalDataset& data, const FitConfig& config, const Vector& beta0);

/// Coordinate descent (quad_cd / cubic_cd only) over the `active` coordinates;
/// all others stay at their beta0 values. `bounds` must come from
/// lipschitz_constants(data).
FitResult fit_support(const SortedSurvivalDataset& data, const FitConfig& config,
                      const Vector& beta0, std::span<const std::size_t> active,
                      const LipschitzTable& bounds);

struct BenchmarkRun {
  FitConfig config;
  FitResult result;
  /// Non-empty when the configuration was rejected instead of run.
  std::string skipped_reason;
};

/// Runs every config from beta = 0 on the same data. A rejected or diverging
/// config is recorded, never fatal. Uses up to `threads` workers.
std::vector<BenchmarkRun> benchmark(const SortedSurvivalDataset& data,
                                    const std::vector<FitConfig>& configs, unsigned threads = 1);

/// CSV with columns method,lambda1,lambda2,sweep,loss,objective,elapsed_s.
void write_trace_csv(std::ostream& out, const FitConfig& config, const FitResult& result);

/// Worker count from FASTSURV_THREADS (default: hardware concurrency).
unsigned configured_threads();

}  // namespace fastsurv
