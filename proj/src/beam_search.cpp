#include "fastsurv/beam_search.hpp"

#include "fastsurv/errors.hpp"
#include "fastsurv/surrogate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

namespace fastsurv {

namespace {

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Minimizes the loss over beta[feature] alone, starting from `start`.
Candidate score_feature(const SortedSurvivalDataset& data, const BeamState& state,
                        const LipschitzTable& bounds, const SelectionConfig& config,
                        std::size_t feature, double start) {
  Candidate out;
  out.feature = feature;
  const auto j = static_cast<Eigen::Index>(feature);
  if (bounds.l2[j] == 0.0) {
    out.usable = false;
    return out;
  }
  const bool cubic = config.inner_method == Method::CubicCd;
  LinearPredictor trial = state.eta;
  double value = start;
  if (value != 0.0) update_eta(trial, data, feature, value);
  for (int it = 0; it < config.scoring_max_iterations; ++it) {
    const auto partials = coordinate_partials(data, trial, feature, cubic ? 2 : 1);
    const double step = cubic ? cubic_step(partials.d1, partials.d2, bounds.l3[j])
                              : quad_step(partials.d1, bounds.l2[j]);
    if (step == 0.0) break;
    value += step;
    update_eta(trial, data, feature, step);
    if (std::abs(step) <= config.inner_tol * std::max(1.0, std::abs(value))) break;
  }
  out.coefficient = value;
  out.decrease = state.loss - cph_loss(data, trial);
  return out;
}

bool support_less(const BeamState& a, const BeamState& b) {
  if (a.loss != b.loss) return a.loss < b.loss;
  return a.support < b.support;
}

}  // namespace

void validate_selection_config(const SelectionConfig& config, std::size_t p) {
  if (config.beam_width < 1) throw UsageError("beam width must be >= 1");
  if (config.candidates_per_beam < 1) throw UsageError("candidates per beam must be >= 1");
  if (config.k_max < 1 || config.k_max > p) {
    throw UsageError("k_max must be between 1 and the number of features (" + std::to_string(p) + ")");
  }
  if (!is_coordinate_descent(config.inner_method)) {
    throw UsageError("beam search needs quad_cd or cubic_cd as inner method");
  }
  if (config.scoring_max_iterations < 1 || config.finetune_max_sweeps < 1) {
    throw UsageError("inner iteration limits must be positive");
  }
}

BeamState empty_state(const SortedSurvivalDataset& data) {
  BeamState state;
  state.beta = Vector::Zero(static_cast<Eigen::Index>(data.p()));
  state.eta = compute_eta(data, state.beta);
  state.loss = cph_loss(data, state.eta);
  return state;
}

std::vector<Candidate> rank_candidates(const SortedSurvivalDataset& data, const BeamState& state,
                                       const LipschitzTable& bounds, const SelectionConfig& config) {
  std::vector<std::size_t> outside;
  outside.reserve(data.p());
  for (std::size_t l = 0; l < data.p(); ++l) {
    if (!std::binary_search(state.support.begin(), state.support.end(), l)) outside.push_back(l);
  }
  const bool warm = config.warm_start_candidates && state.candidate_hints.size() == state.beta.size();
  std::vector<Candidate> scored(outside.size());
  parallel_for(outside.size(), config.threads, [&](std::size_t i) {
    const std::size_t l = outside[i];
    const double start = warm ? state.candidate_hints[static_cast<Eigen::Index>(l)] : 0.0;
    scored[i] = score_feature(data, state, bounds, config, l, start);
  });
  std::stable_sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
    if (a.decrease != b.decrease) return a.decrease > b.decrease;
    return a.feature < b.feature;
  });
  return scored;
}

BeamState finetune_support(const SortedSurvivalDataset& data, std::vector<std::size_t> support,
                           const Vector& beta0, const LipschitzTable& bounds,
                           const SelectionConfig& config) {
  std::sort(support.begin(), support.end());
  FitConfig fc;
  fc.method = config.inner_method;
  fc.max_sweeps = config.finetune_max_sweeps;
  fc.tol = config.inner_tol;
  fc.trace = false;
  FitResult result = fit_support(data, fc, beta0, support, bounds);
  BeamState state;
  state.support = std::move(support);
  state.beta = std::move(result.beta);
  state.eta = compute_eta(data, state.beta);
  state.loss = cph_loss(data, state.eta);
  return state;
}

std::vector<BeamState> expand_and_finetune(const SortedSurvivalDataset& data,
                                           const std::vector<BeamState>& frontier,
                                           const LipschitzTable& bounds,
                                           const SelectionConfig& config) {
  struct Seed {
    std::vector<std::size_t> support;
    Vector beta;
    Vector hints;
  };
  std::vector<Seed> seeds;
  for (const auto& state : frontier) {
    const auto ranked = rank_candidates(data, state, bounds, config);
    Vector hints = Vector::Zero(state.beta.size());
    for (const auto& c : ranked) hints[static_cast<Eigen::Index>(c.feature)] = c.coefficient;
    std::size_t taken = 0;
    for (const auto& c : ranked) {
      if (taken == config.candidates_per_beam) break;
      if (!c.usable) continue;
      Seed seed;
      seed.support = state.support;
      seed.support.insert(std::lower_bound(seed.support.begin(), seed.support.end(), c.feature), c.feature);
      seed.beta = state.beta;
      seed.beta[static_cast<Eigen::Index>(c.feature)] = c.coefficient;
      seed.hints = hints;
      seeds.push_back(std::move(seed));
      ++taken;
    }
  }

  std::vector<BeamState> children(seeds.size());
  parallel_for(seeds.size(), config.threads, [&](std::size_t i) {
    children[i] = finetune_support(data, seeds[i].support, seeds[i].beta, bounds, config);
    children[i].candidate_hints = std::move(seeds[i].hints);
  });

  std::map<std::vector<std::size_t>, std::size_t> best_by_support;
  for (std::size_t i = 0; i < children.size(); ++i) {
    auto [it, inserted] = best_by_support.emplace(children[i].support, i);
    if (!inserted && children[i].loss < children[it->second].loss) it->second = i;
  }
  std::vector<BeamState> next;
  next.reserve(best_by_support.size());
  for (auto& [support, index] : best_by_support) next.push_back(std::move(children[index]));
  std::sort(next.begin(), next.end(), support_less);
  if (next.size() > config.beam_width) next.resize(config.beam_width);
  return next;
}

SelectionPath beam_search(const SortedSurvivalDataset& data, const SelectionConfig& config) {
  validate_selection_config(config, data.p());
  const LipschitzTable bounds = lipschitz_constants(data);
  SelectionPath path;
  const auto usable = static_cast<std::size_t>((bounds.l2.array() > 0.0).count());
  if (config.k_max > usable) {
    path.warnings.push_back("k_max = " + std::to_string(config.k_max) + " exceeds the " +
                            std::to_string(usable) +
                            " features that vary within risk sets; path truncated");
  }
  std::vector<BeamState> frontier{empty_state(data)};
  for (std::size_t s = 1; s <= config.k_max; ++s) {
    auto next = expand_and_finetune(data, frontier, bounds, config);
    if (next.empty()) {
      if (config.k_max <= usable) {
        path.warnings.push_back("no usable candidates at support size " + std::to_string(s) +
                                "; path truncated");
      }
      break;
    }
    path.best.push_back(next.front());
    frontier = std::move(next);
  }
  return path;
}

}  // namespace fastsurv
