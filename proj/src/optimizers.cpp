#include "fastsurv/optimizers.hpp"

#include "fastsurv/errors.hpp"
#include "fastsurv/surrogate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <thread>

namespace fastsurv {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::QuadCd: return "quad_cd";
    case Method::CubicCd: return "cubic_cd";
    case Method::ExactNewton: return "exact_newton";
    case Method::QuasiNewton: return "quasi_newton";
    case Method::ProxNewton: return "prox_newton";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::QuadCd, Method::CubicCd, Method::ExactNewton, Method::QuasiNewton,
                   Method::ProxNewton}) {
    if (to_string(m) == name) return m;
  }
  throw UsageError("unknown method '" + std::string(name) +
                   "' (expected quad_cd, cubic_cd, exact_newton, quasi_newton or prox_newton)");
}

bool is_coordinate_descent(Method method) {
  return method == Method::QuadCd || method == Method::CubicCd;
}

void validate_config(const FitConfig& config) {
  if (!(config.lambda1 >= 0.0) || !std::isfinite(config.lambda1)) throw UsageError("lambda1 must be >= 0");
  if (!(config.lambda2 >= 0.0) || !std::isfinite(config.lambda2)) throw UsageError("lambda2 must be >= 0");
  if (config.max_sweeps < 1) throw UsageError("max_sweeps must be positive");
  if (!(config.tol >= 0.0)) throw UsageError("tol must be >= 0");
  if (config.method == Method::ExactNewton && config.lambda1 > 0.0) {
    throw UsageError("exact_newton cannot handle lambda1 > 0 (the l1 penalty is not twice differentiable)");
  }
  if (config.inner_max_passes < 1) throw UsageError("inner_max_passes must be positive");
  if (config.eta_refresh_every < 1) throw UsageError("eta_refresh_every must be positive");
}

double penalized_objective(double loss, const Vector& beta, double lambda1, double lambda2) {
  double penalty = 0.0;
  if (lambda1 > 0.0) penalty += lambda1 * beta.lpNorm<1>();
  if (lambda2 > 0.0) penalty += lambda2 * beta.squaredNorm();
  return loss + penalty;
}

bool check_convergence(double beta_change_inf_norm, double sweep_loss_decrease, double tol) {
  return beta_change_inf_norm <= tol && sweep_loss_decrease <= tol;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double relative_decrease(double before, double after) {
  return (before - after) / std::max(1.0, std::abs(before));
}

class Trainer {
 public:
  Trainer(const SortedSurvivalDataset& data, const FitConfig& config, const Vector& beta0,
          std::span<const std::size_t> active = {}, const LipschitzTable* bounds = nullptr)
      : data_(data), config_(config), bounds_(bounds), start_(Clock::now()) {
    if (active.empty()) {
      active_.resize(data_.p());
      for (std::size_t l = 0; l < data_.p(); ++l) active_[l] = l;
    } else {
      active_.assign(active.begin(), active.end());
    }
    result_.beta = beta0;
    eta_ = compute_eta(data_, result_.beta);
    loss_ = cph_loss(data_, eta_);
    objective_ = objective_of(loss_);
    record(0);
  }

  FitResult run() {
    if (is_coordinate_descent(config_.method)) {
      run_coordinate_descent();
    } else {
      run_newton();
    }
    result_.final_loss = loss_;
    result_.final_objective = objective_;
    return std::move(result_);
  }

 private:
  double objective_of(double loss) const {
    return penalized_objective(loss, result_.beta, config_.lambda1, config_.lambda2);
  }

  void record(int iteration) {
    if (!config_.trace) return;
    result_.loss_trace.push_back({iteration, loss_, objective_, seconds_since(start_)});
  }

  // Returns true when the run should stop.
  bool finish_iteration(int iteration, double max_change, double previous_objective) {
    result_.sweeps_used = iteration;
    record(iteration);
    if (!std::isfinite(objective_)) {
      result_.diverged = true;
      return true;
    }
    const double decrease = std::abs(relative_decrease(previous_objective, objective_));
    if (check_convergence(max_change, decrease, config_.tol)) {
      result_.converged = true;
      return true;
    }
    return false;
  }

  void run_coordinate_descent() {
    const bool cubic = config_.method == Method::CubicCd;
    LipschitzTable own_bounds;
    if (bounds_ == nullptr) {
      own_bounds = lipschitz_constants(data_);
      bounds_ = &own_bounds;
    }
    const LipschitzTable& bounds = *bounds_;
    const bool penalized = config_.lambda1 > 0.0 || config_.lambda2 > 0.0;
    Vector& beta = result_.beta;

    for (int sweep = 1; sweep <= config_.max_sweeps; ++sweep) {
      const double sweep_start_objective = objective_;
      double current = objective_;
      double max_change = 0.0;
      for (const std::size_t l : active_) {
        const auto j = static_cast<Eigen::Index>(l);
        if (bounds.l2[j] == 0.0 && !penalized) continue;
        const auto partials = coordinate_partials(data_, eta_, l, cubic ? 2 : 1);
        const double x = beta[j];
        double step = 0.0;
        if (cubic) {
          const auto absorbed = elasticnet_absorb(partials.d1, partials.d2, config_.lambda2, x);
          step = cubic_step_l1({absorbed.a, absorbed.b, bounds.l3[j], x, config_.lambda1});
        } else {
          const auto absorbed = elasticnet_absorb(partials.d1, bounds.l2[j], config_.lambda2, x);
          step = quad_step_l1({absorbed.a, absorbed.b, x, config_.lambda1});
        }
        const double updated = x + step;
        if (updated == x) continue;
        beta[j] = updated;
        update_eta(eta_, data_, l, updated - x);
        max_change = std::max(max_change, std::abs(updated - x));

        if (config_.assert_monotone) {
          const double next = objective_of(cph_loss(data_, eta_));
          ++result_.monotone_checks;
          const double increase = next - current;
          if (increase > kMonotoneSlack) ++result_.monotone_violations;
          result_.max_objective_increase = std::max(result_.max_objective_increase, increase);
          current = next;
        }
      }
      if (sweep % config_.eta_refresh_every == 0) eta_ = compute_eta(data_, beta);
      loss_ = cph_loss(data_, eta_);
      objective_ = objective_of(loss_);
      if (finish_iteration(sweep, max_change, sweep_start_objective)) break;
    }
    bounds_ = nullptr;
  }

  Vector newton_direction(const Vector& grad_eta) {
    const Vector& beta = result_.beta;
    Matrix hessian = beta_hessian(data_, eta_);
    hessian.diagonal().array() += 2.0 * config_.lambda2;
    const Vector grad = data_.x().transpose() * grad_eta + 2.0 * config_.lambda2 * beta;
    Eigen::LDLT<Matrix> ldlt(hessian);
    const Vector pivots = ldlt.vectorD().cwiseAbs();
    const bool well_posed = pivots.size() == 0 ||
                            pivots.minCoeff() > 1e-12 * std::max(1.0, pivots.maxCoeff());
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && well_posed) {
      const Vector step = -ldlt.solve(grad);
      if (step.allFinite() && (hessian * step + grad).norm() <= 1e-6 * std::max(1.0, grad.norm())) {
        return step;
      }
    }
    result_.singular_hessian = true;
    return -hessian.completeOrthogonalDecomposition().solve(grad);
  }

  // Minimizes the diagonal quadratic model of the loss plus the penalty by
  // cyclic coordinate passes. Returns the new coefficient vector.
  Vector diagonal_model_step(const Vector& grad_eta, const Vector& hdiag) {
    const Matrix& x = data_.x();
    Vector z = result_.beta;
    Vector residual = grad_eta;  // model gradient in eta-space at z
    const Vector curvature = (x.array().square().colwise() * hdiag.array()).colwise().sum().transpose();
    for (int pass = 0; pass < config_.inner_max_passes; ++pass) {
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double b = curvature[j] + 2.0 * config_.lambda2;
        const double a = x.col(j).dot(residual) + 2.0 * config_.lambda2 * z[j];
        if (!(b > 0.0)) continue;
        const double step = quad_step_l1({a, b, z[j], config_.lambda1});
        if (step == 0.0) continue;
        z[j] += step;
        residual.array() += step * hdiag.array() * x.col(j).array();
        max_change = std::max(max_change, std::abs(step));
      }
      if (max_change <= config_.inner_tol) break;
    }
    return z;
  }

  void run_newton() {
    Vector& beta = result_.beta;
    for (int iteration = 1; iteration <= config_.max_sweeps; ++iteration) {
      const double previous_objective = objective_;
      const Vector grad_eta = eta_gradient(data_, eta_);
      Vector next;
      switch (config_.method) {
        case Method::ExactNewton: next = beta + newton_direction(grad_eta); break;
        case Method::QuasiNewton: next = diagonal_model_step(grad_eta, eta_hessian_diagonal(data_, eta_)); break;
        default: next = diagonal_model_step(grad_eta, eta_hessian_upper_diagonal(data_, eta_)); break;
      }
      const double max_change = next.allFinite() ? (next - beta).lpNorm<Eigen::Infinity>()
                                                 : std::numeric_limits<double>::infinity();
      beta = std::move(next);
      try {
        eta_ = compute_eta(data_, beta);
        loss_ = cph_loss(data_, eta_);
      } catch (const NumericError&) {
        loss_ = std::numeric_limits<double>::infinity();
      }
      objective_ = std::isfinite(loss_) ? objective_of(loss_) : loss_;
      if (finish_iteration(iteration, max_change, previous_objective)) return;
    }
  }

  const SortedSurvivalDataset& data_;
  const FitConfig& config_;
  const LipschitzTable* bounds_;
  std::vector<std::size_t> active_;
  Clock::time_point start_;
  FitResult result_;
  LinearPredictor eta_;
  double loss_ = 0.0;
  double objective_ = 0.0;
};

}  // namespace

FitResult fit(const SortedSurvivalDataset& data, const FitConfig& config) {
  return fit(data, config, Vector::Zero(static_cast<Eigen::Index>(data.p())));
}

FitResult fit(const SortedSurvivalDataset& data, const FitConfig& config, const Vector& beta0) {
  validate_config(config);
  if (static_cast<std::size_t>(beta0.size()) != data.p()) {
    throw ValidationError("initial coefficients have length " + std::to_string(beta0.size()) +
                          " but the data has " + std::to_string(data.p()) + " features");
  }
  return Trainer(data, config, beta0).run();
}

FitResult fit_support(const SortedSurvivalDataset& data, const FitConfig& config,
                      const Vector& beta0, std::span<const std::size_t> active,
                      const LipschitzTable& bounds) {
  validate_config(config);
  if (!is_coordinate_descent(config.method)) {
    throw UsageError("fit_support requires quad_cd or cubic_cd");
  }
  if (static_cast<std::size_t>(beta0.size()) != data.p()) {
    throw ValidationError("initial coefficients do not match the number of features");
  }
  for (std::size_t l : active) {
    if (l >= data.p()) throw ValidationError("active coordinate out of range");
  }
  if (active.empty()) {
    FitResult out;
    out.beta = beta0;
    out.final_loss = cph_loss(data, compute_eta(data, beta0));
    out.final_objective = penalized_objective(out.final_loss, beta0, config.lambda1, config.lambda2);
    out.converged = true;
    return out;
  }
  return Trainer(data, config, beta0, active, &bounds).run();
}

std::vector<BenchmarkRun> benchmark(const SortedSurvivalDataset& data,
                                    const std::vector<FitConfig>& configs, unsigned threads) {
  std::vector<BenchmarkRun> runs(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      runs[i].config = configs[i];
      try {
        runs[i].result = fit(data, configs[i]);
      } catch (const UsageError& e) {
        runs[i].skipped_reason = e.what();
      } catch (const NumericError& e) {
        runs[i].result.diverged = true;
        runs[i].skipped_reason = e.what();
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(configs.size())));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return runs;
}

void write_trace_csv(std::ostream& out, const FitConfig& config, const FitResult& result) {
  out << "method,lambda1,lambda2,sweep,loss,objective,elapsed_s\n";
  for (const auto& point : result.loss_trace) {
    out << to_string(config.method) << ',' << format_double(config.lambda1) << ','
        << format_double(config.lambda2) << ',' << point.iteration << ',' << format_double(point.loss)
        << ',' << format_double(point.objective) << ',' << format_double(point.elapsed_seconds) << '\n';
  }
}

unsigned configured_threads() {
  unsigned fallback = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FASTSURV_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return std::min<unsigned>(static_cast<unsigned>(value), 1024u);
  }
  return fallback;
}

}  // namespace fastsurv
