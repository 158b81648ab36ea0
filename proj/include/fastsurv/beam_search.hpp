#pragma once

#include "fastsurv/optimizers.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace fastsurv {

/// One node of the beam: a support set with its fitted coefficients.
/// `beta` is zero outside `support`; `loss` is the unpenalized loss at `beta`.
struct BeamState {
  std::vector<std::size_t> support;  // sorted ascending
  Vector beta;
  double loss = 0.0;
  LinearPredictor eta;
  /// Per-feature coefficients reached when the parent was scored; used as
  /// starting values when warm_start_candidates is set.
  Vector candidate_hints;
};

struct SelectionConfig {
  std::size_t k_max = 1;
  std::size_t beam_width = 10;
  std::size_t candidates_per_beam = 10;
  /// quad_cd or cubic_cd; used for candidate scoring and fine-tuning.
  Method inner_method = Method::CubicCd;
  double inner_tol = 1e-8;
  int scoring_max_iterations = 100;
  int finetune_max_sweeps = 1000;
  /// Start each trial coefficient from the value it reached when the parent
  /// state was scored, instead of from 0.
  bool warm_start_candidates = false;
  unsigned threads = 1;
};

/// Throws UsageError unless B >= 1, m >= 1, 1 <= k_max <= p and the inner
/// method is coordinate descent.
void validate_selection_config(const SelectionConfig& config, std::size_t p);

struct Candidate {
  std::size_t feature = 0;
  double coefficient = 0.0;
  double decrease = 0.0;
  bool usable = true;  // false when L2 == 0 (constant over every risk set)
};

BeamState empty_state(const SortedSurvivalDataset& data);

/// Scores every feature outside the support by optimizing its coefficient
/// alone from the state's eta. Sorted by decrease (descending), then index.
std::vector<Candidate> rank_candidates(const SortedSurvivalDataset& data, const BeamState& state,
                                       const LipschitzTable& bounds, const SelectionConfig& config);

/// One beam step: children of every state, fine-tuned on their support,
/// deduplicated by support and truncated to the best `beam_width`.
std::vector<BeamState> expand_and_finetune(const SortedSurvivalDataset& data,
                                           const std::vector<BeamState>& frontier,
                                           const LipschitzTable& bounds,
                                           const SelectionConfig& config);

struct SelectionPath {
  /// best[s - 1] is the lowest-loss state with support size s.
  std::vector<BeamState> best;
  std::vector<std::string> warnings;
};

SelectionPath beam_search(const SortedSurvivalDataset& data, const SelectionConfig& config);

/// Fine-tunes `beta0` on `support` with unregularized coordinate descent.
BeamState finetune_support(const SortedSurvivalDataset& data, std::vector<std::size_t> support,
                           const Vector& beta0, const LipschitzTable& bounds,
                           const SelectionConfig& config);

}  // namespace fastsurv
