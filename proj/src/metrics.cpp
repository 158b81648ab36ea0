#include "fastsurv/metrics.hpp"

#include "fastsurv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>

namespace fastsurv {

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  // Count of inserted ranks < i.
  std::uint64_t prefix(std::size_t i) const {
    std::uint64_t total = 0;
    for (; i > 0; i -= i & (~i + 1)) total += tree_[i];
    return total;
  }

 private:
  std::vector<std::uint64_t> tree_;
};

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Index of the last entry <= t, or -1.
std::ptrdiff_t last_at_or_before(const std::vector<double>& times, double t) {
  return std::upper_bound(times.begin(), times.end(), t) - times.begin() - 1;
}

}  // namespace

double concordance_index(std::span<const double> times, std::span<const double> events,
                         std::span<const double> risk_scores) {
  const std::size_t n = times.size();
  if (events.size() != n || risk_scores.size() != n) {
    throw ValidationError("concordance index inputs differ in length");
  }
  std::vector<double> levels(risk_scores.begin(), risk_scores.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  auto rank_of = [&](double r) {
    return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), r) - levels.begin());
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });

  Fenwick tree(levels.size());
  std::uint64_t inserted = 0;
  long double concordant = 0.0L;
  long double comparable = 0.0L;
  for (std::size_t begin = 0; begin < n;) {
    std::size_t end = begin;
    while (end < n && times[order[end]] == times[order[begin]]) ++end;
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t i = order[k];
      if (events[i] == 0.0) continue;
      const std::size_t r = rank_of(risk_scores[i]);
      const std::uint64_t lower = tree.prefix(r);
      const std::uint64_t tied = tree.prefix(r + 1) - lower;
      concordant += static_cast<long double>(lower) + 0.5L * static_cast<long double>(tied);
      comparable += static_cast<long double>(inserted);
    }
    for (std::size_t k = begin; k < end; ++k) {
      tree.add(rank_of(risk_scores[order[k]]));
      ++inserted;
    }
    begin = end;
  }
  if (comparable == 0.0L) throw UndefinedMetricError("concordance index has no comparable pairs");
  return static_cast<double>(concordant / comparable);
}

double concordance_index(const Vector& times, const Vector& events, const Vector& risk_scores) {
  return concordance_index(as_span(times), as_span(events), as_span(risk_scores));
}

double BaselineHazard::relative_at(double t) const {
  const auto k = last_at_or_before(times, t);
  return k < 0 ? 0.0 : cumulative[static_cast<std::size_t>(k)];
}

double BaselineHazard::at(double t) const { return relative_at(t) * std::exp(-stabilizer); }

BaselineHazard breslow_baseline(const SortedSurvivalDataset& data, const Vector& beta) {
  const LinearPredictor eta = compute_eta(data, beta);
  BaselineHazard out;
  out.stabilizer = eta.stabilizer;
  std::vector<double> jump_times;
  std::vector<double> jumps;
  CompensatedSum s0;
  for (const auto& g : data.groups()) {
    for (std::size_t j = g.begin; j < g.end; ++j) s0.add(eta.weights[static_cast<Eigen::Index>(j)]);
    if (g.events == 0.0) continue;
    jump_times.push_back(data.time()[static_cast<Eigen::Index>(g.begin)]);
    jumps.push_back(g.events / s0.value());
  }
  // Groups run from the latest time to the earliest.
  std::reverse(jump_times.begin(), jump_times.end());
  std::reverse(jumps.begin(), jumps.end());
  out.times = std::move(jump_times);
  out.cumulative.resize(jumps.size());
  CompensatedSum total;
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    total.add(jumps[k]);
    out.cumulative[k] = total.value();
  }
  return out;
}

SurvivalFunctionEstimate predict_survival(const BaselineHazard& baseline, const Vector& eta,
                                          std::span<const double> time_grid) {
  SurvivalFunctionEstimate out;
  out.time_grid.assign(time_grid.begin(), time_grid.end());
  const auto n = eta.size();
  const auto g = static_cast<Eigen::Index>(time_grid.size());
  out.survival.resize(n, g);
  const Vector scale = (eta.array() - baseline.stabilizer).exp().matrix();
  for (Eigen::Index k = 0; k < g; ++k) {
    const double h = baseline.relative_at(time_grid[static_cast<std::size_t>(k)]);
    for (Eigen::Index i = 0; i < n; ++i) {
      out.survival(i, k) = std::clamp(std::exp(-h * scale[i]), 0.0, 1.0);
    }
  }
  return out;
}

double CensoringSurvival::at(double t) const {
  const auto k = last_at_or_before(times, t);
  return k < 0 ? 1.0 : values[static_cast<std::size_t>(k)];
}

double CensoringSurvival::before(double t) const {
  const auto k = std::lower_bound(times.begin(), times.end(), t) - times.begin() - 1;
  return k < 0 ? 1.0 : values[static_cast<std::size_t>(k)];
}

CensoringSurvival censoring_kaplan_meier(const Vector& times, const Vector& events) {
  if (times.size() != events.size()) throw ValidationError("time and event lengths differ");
  const auto n = static_cast<std::size_t>(times.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return times[static_cast<Eigen::Index>(a)] < times[static_cast<Eigen::Index>(b)];
  });
  CensoringSurvival out;
  double g = 1.0;
  for (std::size_t begin = 0; begin < n;) {
    const double t = times[static_cast<Eigen::Index>(order[begin])];
    std::size_t end = begin;
    double censored = 0.0;
    while (end < n && times[static_cast<Eigen::Index>(order[end])] == t) {
      if (events[static_cast<Eigen::Index>(order[end])] == 0.0) censored += 1.0;
      ++end;
    }
    if (censored > 0.0) {
      const double at_risk = static_cast<double>(n - begin);
      g *= 1.0 - censored / at_risk;
      out.times.push_back(t);
      out.values.push_back(g);
    }
    begin = end;
  }
  return out;
}

std::vector<double> default_time_grid(const Vector& times, std::size_t points) {
  if (times.size() == 0) throw ValidationError("cannot build a time grid from no samples");
  if (points < 1) throw UsageError("time grid needs at least one point");
  std::vector<double> sorted(times.data(), times.data() + times.size());
  std::sort(sorted.begin(), sorted.end());
  const double lo = empirical_quantile(sorted, 0.01);
  const double hi = empirical_quantile(sorted, 0.99);
  if (points == 1 || hi <= lo) return {lo};
  std::vector<double> grid(points);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
  }
  grid.back() = hi;
  return grid;
}

IbsResult integrated_brier_score(const CensoringSurvival& censoring, const Vector& test_times,
                                 const Vector& test_events, const SurvivalFunctionEstimate& predicted) {
  const auto n = test_times.size();
  if (test_events.size() != n || predicted.survival.rows() != n) {
    throw ValidationError("Brier score inputs differ in length");
  }
  if (n == 0) throw UndefinedMetricError("Brier score of an empty sample");
  if (!std::is_sorted(predicted.time_grid.begin(), predicted.time_grid.end())) {
    throw ValidationError("time grid must be increasing");
  }
  IbsResult out;
  for (std::size_t k = 0; k < predicted.time_grid.size(); ++k) {
    const double t = predicted.time_grid[k];
    const double g_t = censoring.at(t);
    if (!(g_t > 0.0)) {
      out.truncated = true;
      continue;
    }
    CompensatedSum sum;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = predicted.survival(i, static_cast<Eigen::Index>(k));
      const double ti = test_times[i];
      if (ti <= t && test_events[i] != 0.0) {
        sum.add(s * s / censoring.before(ti));
      } else if (ti > t) {
        sum.add((1.0 - s) * (1.0 - s) / g_t);
      }
    }
    out.grid.push_back(t);
    out.brier.push_back(sum.value() / static_cast<double>(n));
  }
  if (out.grid.empty()) {
    throw UndefinedMetricError("censoring distribution reaches 0 before every grid point");
  }
  if (out.truncated) {
    out.warning = "censoring survival reaches 0 inside the time grid; grid truncated to " +
                  std::to_string(out.grid.size()) + " points";
  }
  if (out.grid.size() == 1) {
    out.value = out.brier.front();
    return out;
  }
  CompensatedSum area;
  for (std::size_t k = 1; k < out.grid.size(); ++k) {
    area.add(0.5 * (out.brier[k] + out.brier[k - 1]) * (out.grid[k] - out.grid[k - 1]));
  }
  const double span = out.grid.back() - out.grid.front();
  out.value = span > 0.0 ? area.value() / span : out.brier.front();
  return out;
}

IbsResult integrated_brier_score(const SortedSurvivalDataset& train, const SurvivalDataset& test,
                                 const Vector& beta, std::span<const double> time_grid) {
  if (test.p() != train.p()) throw SchemaError("train and test have different feature counts");
  const BaselineHazard baseline = breslow_baseline(train, beta);
  const CensoringSurvival censoring = censoring_kaplan_meier(train.time(), train.event());
  const Vector eta = test.x * beta;
  return integrated_brier_score(censoring, test.time, test.event,
                                predict_survival(baseline, eta, time_grid));
}

RecoveryScores support_recovery(std::span<const std::size_t> estimated,
                                std::span<const std::size_t> truth) {
  const std::set<std::size_t> est(estimated.begin(), estimated.end());
  const std::set<std::size_t> tru(truth.begin(), truth.end());
  std::size_t common = 0;
  for (std::size_t j : est) common += tru.count(j);
  RecoveryScores out;
  out.precision = est.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(est.size());
  out.recall = tru.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(tru.size());
  const double denom = out.precision + out.recall;
  out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

RecoveryScores support_recovery(const Vector& beta_hat, const Vector& beta_star) {
  if (beta_hat.size() != beta_star.size()) throw ValidationError("coefficient vectors differ in length");
  std::vector<std::size_t> est;
  std::vector<std::size_t> tru;
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    if (beta_hat[j] != 0.0) est.push_back(static_cast<std::size_t>(j));
    if (beta_star[j] != 0.0) tru.push_back(static_cast<std::size_t>(j));
  }
  return support_recovery(est, tru);
}

EvaluationMetrics evaluate_model(const SortedSurvivalDataset& train, const SortedSurvivalDataset& eval,
                                 const Vector& beta) {
  EvaluationMetrics out;
  const LinearPredictor eta = compute_eta(eval, beta);
  out.cph_loss = cph_loss(eval, eta);
  try {
    out.cindex = concordance_index(eval.time(), eval.event(), eta.eta);
  } catch (const UndefinedMetricError& e) {
    out.warnings.emplace_back(e.what());
  }
  try {
    const auto grid = default_time_grid(eval.time());
    const auto ibs = integrated_brier_score(train, eval.base(), beta, grid);
    out.ibs = ibs.value;
    if (ibs.truncated) out.warnings.push_back(ibs.warning);
  } catch (const UndefinedMetricError& e) {
    out.warnings.emplace_back(e.what());
  }
  return out;
}

}  // namespace fastsurv
