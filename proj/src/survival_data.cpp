#include "fastsurv/survival_data.hpp"

#include "fastsurv/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string_view>

namespace fastsurv {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '"')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '"')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

bool parse_double(const std::string& text, double& value) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

}  // namespace

void validate_structure(const SurvivalDataset& data) {
  const auto n = data.x.rows();
  if (n < 1) throw ValidationError("dataset has no rows");
  if (data.x.cols() < 1) throw ValidationError("dataset has no feature columns");
  if (data.time.size() != n || data.event.size() != n) {
    throw ValidationError("time/event length does not match the number of rows");
  }
  if (static_cast<Eigen::Index>(data.feature_names.size()) != data.x.cols()) {
    throw ValidationError("feature_names length does not match the number of columns");
  }
  if (!data.x.allFinite()) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(data.x(i, j))) {
          throw ValidationError("non-finite feature value at row " + std::to_string(i) + ", column '" +
                                data.feature_names[static_cast<std::size_t>(j)] + "'");
        }
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(data.time[i]) || data.time[i] < 0.0) {
      throw ValidationError("observation time at row " + std::to_string(i) +
                            " must be finite and nonnegative");
    }
    if (data.event[i] != 0.0 && data.event[i] != 1.0) {
      throw ValidationError("event indicator at row " + std::to_string(i) + " must be 0 or 1");
    }
  }
}

void validate(const SurvivalDataset& data) {
  validate_structure(data);
  if (data.event_count() < 1.0) throw ValidationError("no events: every sample is censored");
}

SurvivalDataset subset_rows(const SurvivalDataset& data, std::span<const std::size_t> rows) {
  SurvivalDataset out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.x.resize(m, data.x.cols());
  out.time.resize(m);
  out.event.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto src = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
    out.x.row(r) = data.x.row(src);
    out.time[r] = data.time[src];
    out.event[r] = data.event[src];
  }
  out.feature_names = data.feature_names;
  return out;
}

// ---------------------------------------------------------------------------

SortedSurvivalDataset::SortedSurvivalDataset(SurvivalDataset data) {
  validate(data);
  const std::size_t n = data.n();
  permutation_.resize(n);
  std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
  std::stable_sort(permutation_.begin(), permutation_.end(),
                   [&](std::size_t a, std::size_t b) { return data.time[a] > data.time[b]; });

  base_ = subset_rows(data, permutation_);

  group_of_.resize(n);
  for (std::size_t i = 0; i < n;) {
    TieGroup g;
    g.begin = i;
    std::size_t j = i;
    while (j < n && base_.time[j] == base_.time[i]) {
      g.events += base_.event[j];
      group_of_[j] = groups_.size();
      ++j;
    }
    g.end = j;
    groups_.push_back(g);
    i = j;
  }

  event_count_ = base_.event.sum();
  feature_centers_ = base_.x.colwise().mean().transpose();
  event_feature_sums_ = base_.x.transpose() * base_.event;
  centered_event_sums_ =
      (base_.x.rowwise() - feature_centers_.transpose()).transpose() * base_.event;
}

SurvivalDataset SortedSurvivalDataset::unsorted() const {
  std::vector<std::size_t> inverse(permutation_.size());
  for (std::size_t i = 0; i < permutation_.size(); ++i) inverse[permutation_[i]] = i;
  return subset_rows(base_, inverse);
}

SortedSurvivalDataset sort_and_index(SurvivalDataset data) {
  return SortedSurvivalDataset(std::move(data));
}

// ---------------------------------------------------------------------------
// CSV

SurvivalDataset read_csv(std::istream& in, const std::string& time_column,
                         const std::string& event_column) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("CSV input is empty: header row missing");
  const auto header = split_fields(line);

  std::ptrdiff_t time_idx = -1;
  std::ptrdiff_t event_idx = -1;
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == time_column) {
      time_idx = static_cast<std::ptrdiff_t>(c);
    } else if (header[c] == event_column) {
      event_idx = static_cast<std::ptrdiff_t>(c);
    } else {
      feature_cols.push_back(c);
      names.push_back(header[c]);
    }
  }
  if (time_idx < 0) throw SchemaError("time column '" + time_column + "' not found in header");
  if (event_idx < 0) throw SchemaError("event column '" + event_column + "' not found in header");
  if (feature_cols.empty()) throw SchemaError("CSV has no feature columns");

  std::vector<double> values;
  std::vector<double> times;
  std::vector<double> events;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    }
    auto cell = [&](std::size_t c) {
      double v = 0.0;
      if (!parse_double(fields[c], v) || !std::isfinite(v)) {
        throw ParseError("row " + std::to_string(row) + ", column '" + header[c] +
                         "': not a finite number: '" + fields[c] + "'");
      }
      return v;
    };
    const double t = cell(static_cast<std::size_t>(time_idx));
    const double e = cell(static_cast<std::size_t>(event_idx));
    if (e != 0.0 && e != 1.0) {
      throw ValidationError("row " + std::to_string(row) + ": event value must be 0 or 1, found '" +
                            fields[static_cast<std::size_t>(event_idx)] + "'");
    }
    if (t < 0.0) {
      throw ValidationError("row " + std::to_string(row) + ": observation time must be nonnegative");
    }
    times.push_back(t);
    events.push_back(e);
    for (std::size_t c : feature_cols) values.push_back(cell(c));
  }
  if (times.empty()) throw ValidationError("CSV has a header but no data rows");

  SurvivalDataset out;
  const auto n = static_cast<Eigen::Index>(times.size());
  const auto p = static_cast<Eigen::Index>(feature_cols.size());
  out.x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, p);
  out.time = Eigen::Map<const Vector>(times.data(), n);
  out.event = Eigen::Map<const Vector>(events.data(), n);
  out.feature_names = std::move(names);
  validate(out);
  return out;
}

SurvivalDataset load_csv(const std::filesystem::path& path, const std::string& time_column,
                         const std::string& event_column) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open CSV file '" + path.string() + "'");
  return read_csv(in, time_column, event_column);
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw NumericError("cannot format value");
  return std::string(buf, ptr);
}

void write_csv(const SurvivalDataset& data, std::ostream& out, const std::string& time_column,
               const std::string& event_column) {
  out << time_column << ',' << event_column;
  for (const auto& name : data.feature_names) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    out << format_double(data.time[i]) << ',' << (data.event[i] != 0.0 ? '1' : '0');
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) out << ',' << format_double(data.x(i, j));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Binarization

double empirical_quantile(std::span<const double> sorted_values, double prob) {
  if (sorted_values.empty()) throw ValidationError("quantile of an empty column");
  const double h = (static_cast<double>(sorted_values.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

bool is_binary_column(std::span<const double> column) {
  return std::all_of(column.begin(), column.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

std::vector<double> binarization_thresholds(std::span<const double> column, int quantiles) {
  if (quantiles < 1) throw UsageError("quantiles_per_feature must be >= 1");
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  const double max_value = sorted.back();
  std::vector<double> out;
  for (int k = 1; k <= quantiles; ++k) {
    const double theta = empirical_quantile(sorted, static_cast<double>(k) / (quantiles + 1.0));
    if (theta >= max_value) continue;
    if (!out.empty() && theta == out.back()) continue;
    out.push_back(theta);
  }
  return out;
}

std::string threshold_feature_name(const std::string& source, double threshold) {
  return source + "<=" + format_double(threshold);
}

SurvivalDataset binarize_features(const SurvivalDataset& data, int quantiles_per_feature) {
  if (quantiles_per_feature < 1) throw UsageError("quantiles_per_feature must be >= 1");
  std::vector<Vector> columns;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < data.p(); ++j) {
    const Vector col = data.x.col(static_cast<Eigen::Index>(j));
    const std::span<const double> values(col.data(), static_cast<std::size_t>(col.size()));
    if (is_binary_column(values)) {
      columns.push_back(col);
      names.push_back(data.feature_names[j]);
      continue;
    }
    for (double theta : binarization_thresholds(values, quantiles_per_feature)) {
      columns.push_back((col.array() <= theta).cast<double>().matrix());
      names.push_back(threshold_feature_name(data.feature_names[j], theta));
    }
  }
  SurvivalDataset out;
  out.x.resize(data.x.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) out.x.col(static_cast<Eigen::Index>(j)) = columns[j];
  out.time = data.time;
  out.event = data.event;
  out.feature_names = std::move(names);
  return out;
}

SurvivalDataset materialize_features(const SurvivalDataset& data,
                                     const std::vector<std::string>& names) {
  auto find_column = [&](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(data.feature_names.begin(), data.feature_names.end(), name);
    return it == data.feature_names.end() ? -1 : std::distance(data.feature_names.begin(), it);
  };
  SurvivalDataset out;
  out.x.resize(data.x.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    if (const auto direct = find_column(names[j]); direct >= 0) {
      out.x.col(col) = data.x.col(direct);
      continue;
    }
    const auto split = names[j].rfind("<=");
    double theta = 0.0;
    if (split != std::string::npos && parse_double(names[j].substr(split + 2), theta)) {
      if (const auto source = find_column(names[j].substr(0, split)); source >= 0) {
        out.x.col(col) = (data.x.col(source).array() <= theta).cast<double>().matrix();
        continue;
      }
    }
    throw SchemaError("feature '" + names[j] + "' is not present in the data");
  }
  out.time = data.time;
  out.event = data.event;
  out.feature_names = names;
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

void check_synthetic_params(const SyntheticParams& params) {
  if (params.n < 1) throw UsageError("n must be >= 1");
  if (params.p < 1) throw UsageError("p must be >= 1");
  if (!(params.rho >= 0.0 && params.rho < 1.0)) throw UsageError("rho must lie in [0, 1)");
  if (params.k < 1 || params.k > params.p) throw UsageError("k must satisfy 1 <= k <= p");
  if (!(params.s > 0.0) || !std::isfinite(params.s)) throw UsageError("s must be positive");
}

std::vector<std::size_t> synthetic_support(std::size_t p, std::size_t k) {
  const std::size_t stride = p / k;
  std::vector<std::size_t> support;
  support.reserve(k);
  for (std::size_t m = 1; m <= k; ++m) support.push_back(m * stride - 1);
  return support;
}

std::pair<SurvivalDataset, SyntheticGroundTruth> generate_synthetic(const SyntheticParams& params) {
  check_synthetic_params(params);
  const auto n = static_cast<Eigen::Index>(params.n);
  const auto p = static_cast<Eigen::Index>(params.p);

  SyntheticGroundTruth truth;
  truth.params = params;
  truth.support_star = synthetic_support(params.p, params.k);
  truth.beta_star = Vector::Zero(p);
  for (std::size_t j : truth.support_star) truth.beta_star[static_cast<Eigen::Index>(j)] = 1.0;

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double innovation = std::sqrt(std::max(0.0, 1.0 - params.rho * params.rho));

  SurvivalDataset data;
  data.x.resize(n, p);
  data.time.resize(n);
  data.event.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double prev = normal(rng);
    data.x(i, 0) = prev;
    for (Eigen::Index j = 1; j < p; ++j) {
      prev = params.rho * prev + innovation * normal(rng);
      data.x(i, j) = prev;
    }
    double eta = 0.0;
    for (std::size_t j : truth.support_star) eta += data.x(i, static_cast<Eigen::Index>(j));
    const double v = 1.0 - uniform(rng);  // (0, 1]
    const double death = std::pow(-std::log(v) / std::exp(eta), params.s);
    const double censor = uniform(rng);
    data.event[i] = death < censor ? 1.0 : 0.0;
    data.time[i] = std::min(death, censor);
  }
  data.feature_names.reserve(params.p);
  for (std::size_t j = 0; j < params.p; ++j) data.feature_names.push_back("x" + std::to_string(j));
  return {std::move(data), std::move(truth)};
}

SurvivalDataset generate_clinical_cohort(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw UsageError("n must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::bernoulli_distribution female(0.55);
  std::bernoulli_distribution rare_condition(0.02);

  const std::vector<std::string> names = {"age",     "kappa", "lambda", "creatinine", "albumin",
                                          "calcium", "ldh",   "bmi",    "sbp",        "hgb",
                                          "sex",     "mgus"};
  const auto rows = static_cast<Eigen::Index>(n);
  SurvivalDataset data;
  data.x.resize(rows, static_cast<Eigen::Index>(names.size()));
  data.time.resize(rows);
  data.event.resize(rows);
  data.feature_names = names;

  for (Eigen::Index i = 0; i < rows; ++i) {
    const double age = 63.0 + 10.0 * normal(rng);
    const double z_light = normal(rng);
    const double z_kappa = 0.85 * z_light + std::sqrt(1.0 - 0.85 * 0.85) * normal(rng);
    const double z_lambda = 0.85 * z_light + std::sqrt(1.0 - 0.85 * 0.85) * normal(rng);
    const double kappa = std::exp(0.3 + 0.55 * z_kappa + 0.01 * (age - 63.0));
    const double lambda = std::exp(0.4 + 0.5 * z_lambda + 0.01 * (age - 63.0));
    const double creatinine = std::exp(0.02 * (age - 63.0) + 0.3 * normal(rng));
    const double albumin = 4.0 - 0.01 * (age - 63.0) + 0.35 * normal(rng);
    const double calcium = 9.5 + 0.4 * normal(rng);
    const double ldh = std::exp(5.2 + 0.3 * normal(rng));
    const double bmi = 27.0 + 4.5 * normal(rng);
    const double sbp = 130.0 + 0.3 * (age - 63.0) + 15.0 * normal(rng);
    const double hgb = 13.5 - 0.4 * std::log(creatinine) + 1.2 * normal(rng);
    const double sex = female(rng) ? 1.0 : 0.0;
    const double mgus = rare_condition(rng) ? 1.0 : 0.0;

    const double log_hazard = 0.085 * (age - 63.0) + 0.9 * std::log(kappa) + 0.6 * std::log(lambda) +
                              1.1 * std::log(creatinine) - 0.5 * (albumin - 4.0) - 0.25 * sex +
                              0.9 * mgus - 0.08 * (hgb - 13.5);
    const double death = -std::log(1.0 - uniform(rng)) * 9000.0 / std::exp(log_hazard);
    const double censor = 1000.0 + 4000.0 * uniform(rng);
    data.event[i] = death <= censor ? 1.0 : 0.0;
    data.time[i] = std::ceil(std::min(death, censor));

    const double row[] = {std::round(age), kappa,        lambda, creatinine, albumin, calcium,
                          std::round(ldh), bmi,          std::round(sbp),    hgb,     sex,     mgus};
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) data.x(i, j) = row[j];
  }
  return data;
}

// ---------------------------------------------------------------------------

std::vector<FoldSplit> kfold_split(const SurvivalDataset& data, int folds, std::uint64_t seed) {
  const std::size_t n = data.n();
  if (folds < 2) throw ValidationError("kfold_split requires folds >= 2");
  if (static_cast<std::size_t>(folds) > n) throw ValidationError("more folds than samples");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto k = static_cast<std::size_t>(folds);
  std::vector<FoldSplit> splits(k);
  std::size_t begin = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    std::vector<char> in_test(n, 0);
    for (std::size_t i = begin; i < begin + size; ++i) in_test[order[i]] = 1;
    begin += size;
    double train_events = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_test[i]) {
        splits[f].test.push_back(i);
      } else {
        splits[f].train.push_back(i);
        train_events += data.event[static_cast<Eigen::Index>(i)];
      }
    }
    if (train_events < 1.0) {
      throw ValidationError("training part of fold " + std::to_string(f) + " has no events");
    }
  }
  return splits;
}

}  // namespace fastsurv
