#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fastsurv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Right-censored time-to-event data in original row order.
///
/// `event` holds 0.0 (censored) or 1.0 (event observed). Columns of `x` are
/// named by `feature_names`.
struct SurvivalDataset {
  Matrix x;
  Vector time;
  Vector event;
  std::vector<std::string> feature_names;

  std::size_t n() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(x.cols()); }
  double event_count() const { return event.sum(); }
};

/// Throws ValidationError unless n >= 1, p >= 1, all values finite,
/// times nonnegative, events in {0,1} and at least one event present.
void validate(const SurvivalDataset& data);

/// Shape and value checks without the "at least one event" requirement.
void validate_structure(const SurvivalDataset& data);

SurvivalDataset subset_rows(const SurvivalDataset& data, std::span<const std::size_t> rows);

/// Run of equal observation times in sorted order: positions [begin, end).
struct TieGroup {
  std::size_t begin = 0;
  std::size_t end = 0;
  double events = 0.0;
};

/// Dataset reordered by nonincreasing time so that every risk set
/// R_i = {j : t_j >= t_i} is the prefix [0, tie_group_end(i)).
///
/// Equal times keep original row order. Immutable once built.
class SortedSurvivalDataset {
 public:
  explicit SortedSurvivalDataset(SurvivalDataset data);

  const SurvivalDataset& base() const { return base_; }
  const Matrix& x() const { return base_.x; }
  const Vector& time() const { return base_.time; }
  const Vector& event() const { return base_.event; }
  const std::vector<std::string>& feature_names() const { return base_.feature_names; }
  std::size_t n() const { return base_.n(); }
  std::size_t p() const { return base_.p(); }
  double event_count() const { return event_count_; }

  /// permutation()[i] is the original row of sorted position i.
  std::span<const std::size_t> permutation() const { return permutation_; }
  std::size_t tie_group_start(std::size_t i) const { return groups_[group_of_[i]].begin; }
  std::size_t tie_group_end(std::size_t i) const { return groups_[group_of_[i]].end; }
  std::size_t group_of(std::size_t i) const { return group_of_[i]; }
  const std::vector<TieGroup>& groups() const { return groups_; }

  /// Sum over events of X_il, one entry per feature.
  const Vector& event_feature_sums() const { return event_feature_sums_; }
  /// Column means; derivatives are computed on centred columns.
  const Vector& feature_centers() const { return feature_centers_; }
  /// Sum over events of (X_il - center_l).
  const Vector& centered_event_sums() const { return centered_event_sums_; }

  /// The dataset in its original row order (bit-exact).
  SurvivalDataset unsorted() const;

 private:
  SurvivalDataset base_;
  std::vector<std::size_t> permutation_;
  std::vector<std::size_t> group_of_;
  std::vector<TieGroup> groups_;
  Vector event_feature_sums_;
  Vector feature_centers_;
  Vector centered_event_sums_;
  double event_count_ = 0.0;
};

SortedSurvivalDataset sort_and_index(SurvivalDataset data);

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kDefaultTimeColumn = "time";
inline constexpr const char* kDefaultEventColumn = "event";

/// Reads a header row plus numeric rows. The time and event columns are
/// pulled out; every other column becomes a feature in header order.
SurvivalDataset read_csv(std::istream& in, const std::string& time_column = kDefaultTimeColumn,
                         const std::string& event_column = kDefaultEventColumn);
SurvivalDataset load_csv(const std::filesystem::path& path,
                         const std::string& time_column = kDefaultTimeColumn,
                         const std::string& event_column = kDefaultEventColumn);

/// Writes time, event, then the features, with round-trip precision.
void write_csv(const SurvivalDataset& data, std::ostream& out,
               const std::string& time_column = kDefaultTimeColumn,
               const std::string& event_column = kDefaultEventColumn);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Threshold binarization
//
// Quantile convention: linear interpolation between order statistics
// (Hyndman-Fan type 7). For q quantiles the probabilities are k/(q+1),
// k = 1..q. A threshold theta yields the column 1[c <= theta]; thresholds are
// deduplicated and those giving a constant column (theta >= max) dropped.

double empirical_quantile(std::span<const double> sorted_values, double prob);
std::vector<double> binarization_thresholds(std::span<const double> column, int quantiles);
bool is_binary_column(std::span<const double> column);

/// Feature name for the indicator 1[source <= threshold].
std::string threshold_feature_name(const std::string& source, double threshold);

SurvivalDataset binarize_features(const SurvivalDataset& data, int quantiles_per_feature);

/// Builds a feature matrix whose columns follow `names`. A name is either an
/// existing column or a threshold indicator "col<=value" derived from an
/// existing column. Throws SchemaError for anything else.
SurvivalDataset materialize_features(const SurvivalDataset& data,
                                     const std::vector<std::string>& names);

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticParams {
  std::size_t n = 1200;
  std::size_t p = 1200;
  double rho = 0.9;
  std::size_t k = 15;
  double s = 0.1;
  std::uint64_t seed = 0;
};

struct SyntheticGroundTruth {
  Vector beta_star;
  std::vector<std::size_t> support_star;
  SyntheticParams params;
};

/// Throws UsageError for out-of-range parameters.
void check_synthetic_params(const SyntheticParams& params);

/// 0-based indices of the true support: with stride = floor(p / k) the
/// 1-based positions stride, 2*stride, ..., k*stride.
std::vector<std::size_t> synthetic_support(std::size_t p, std::size_t k);

/// Features are N(0, Sigma) with Sigma_jl = rho^|j-l| (sampled by the AR(1)
/// recursion), death times (-log V / exp(x'beta*))^s, censoring C ~ U(0,1),
/// event = 1[death < C], observed time = min(death, C).
std::pair<SurvivalDataset, SyntheticGroundTruth> generate_synthetic(const SyntheticParams& params);

/// Cohort with skewed, correlated continuous covariates (lab-value style),
/// two binary covariates, integer-day follow-up (so ties occur) and heavy
/// censoring. Used as a stand-in benchmark for threshold binarization.
SurvivalDataset generate_clinical_cohort(std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Cross validation

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffles row indices with `seed` and cuts them into `folds` contiguous
/// test blocks whose sizes differ by at most one. Throws ValidationError if
/// some training part has no event.
std::vector<FoldSplit> kfold_split(const SurvivalDataset& data, int folds, std::uint64_t seed);

}  // namespace fastsurv
