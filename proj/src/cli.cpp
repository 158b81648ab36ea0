#include "fastsurv/cli.hpp"

#include "fastsurv/errors.hpp"
#include "fastsurv/metrics.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace fastsurv {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Every option of `sub` with its effective value, as strings.
json resolved_config(const CLI::App* sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto values = opt->results();
      if (opt->get_items_expected_max() > 1) {
        cfg[name] = values;
      } else if (opt->get_type_size() == 0) {
        cfg[name] = "true";
      } else {
        cfg[name] = values.empty() ? std::string() : values.back();
      }
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

struct Manifest {
  std::string command;
  json config;
  json dataset;
  Clock::time_point start = Clock::now();

  json to_json() const {
    return {{"command", command},
            {"config", config},
            {"dataset", dataset},
            {"version", kVersion},
            {"timings", {{"wall_seconds", std::chrono::duration<double>(Clock::now() - start).count()}}}};
  }
};

struct DataOptions {
  std::string path;
  std::string time_col = kDefaultTimeColumn;
  std::string event_col = kDefaultEventColumn;
  int binarize_quantiles = 0;
};

void add_data_options(CLI::App* sub, DataOptions& opts) {
  sub->add_option("--data", opts.path, "Dataset CSV")->required();
  sub->add_option("--time-col", opts.time_col, "Name of the time column");
  sub->add_option("--event-col", opts.event_col, "Name of the event column (0/1)");
  sub->add_option("--binarize-quantiles", opts.binarize_quantiles,
                  "Replace continuous features by threshold indicators at this many quantiles (0 = off)")
      ->check(CLI::NonNegativeNumber);
}

SurvivalDataset load_dataset(const DataOptions& opts, Manifest& manifest) {
  SurvivalDataset data = load_csv(opts.path, opts.time_col, opts.event_col);
  manifest.dataset = dataset_fingerprint(opts.path, data);
  if (opts.binarize_quantiles > 0) {
    data = binarize_features(data, opts.binarize_quantiles);
    manifest.dataset["binarized_columns"] = data.p();
  }
  validate(data);
  return data;
}

// ---------------------------------------------------------------------------

struct GenerateOptions {
  std::string kind = "synthetic";
  std::size_t n = 1200;
  std::size_t p = 1200;
  double rho = 0.9;
  std::size_t k = 15;
  double s = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateOptions& o, Manifest& manifest, std::ostream& out) {
  const std::filesystem::path csv_path = o.out;
  std::filesystem::path truth_path = csv_path;
  truth_path.replace_extension(".truth.json");

  SurvivalDataset data;
  json truth;
  if (o.kind == "synthetic") {
    SyntheticParams params{o.n, o.p, o.rho, o.k, o.s, o.seed};
    auto [generated, gt] = generate_synthetic(params);
    data = std::move(generated);
    std::vector<std::string> support_names;
    for (std::size_t j : gt.support_star) support_names.push_back(data.feature_names[j]);
    truth = {{"kind", "synthetic"},
             {"params", {{"n", o.n}, {"p", o.p}, {"rho", o.rho}, {"k", o.k}, {"s", o.s}, {"seed", o.seed}}},
             {"support", gt.support_star},
             {"support_feature_names", support_names},
             {"beta_star", vector_json(gt.beta_star)}};
  } else if (o.kind == "clinical") {
    data = generate_clinical_cohort(o.n, o.seed);
    truth = {{"kind", "clinical"}, {"params", {{"n", o.n}, {"seed", o.seed}}}};
  } else {
    throw UsageError("unknown --kind '" + o.kind + "' (expected synthetic or clinical)");
  }

  std::ostringstream csv;
  write_csv(data, csv);
  write_text(csv_path, csv.str());
  manifest.dataset = dataset_fingerprint(csv_path, data);
  truth["manifest"] = manifest.to_json();
  write_json(truth_path, truth);
  out << "wrote " << csv_path.string() << " (" << data.n() << " rows, " << data.p() << " features, "
      << data.event_count() << " events) and " << truth_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  DataOptions data;
  std::string method = "quad_cd";
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double tol = 1e-7;
  int max_sweeps = 1000;
  bool assert_monotone = false;
  std::string out;
};

int cmd_train(const TrainOptions& o, Manifest& manifest, std::ostream& out, std::ostream& err) {
  FitConfig cfg;
  cfg.method = parse_method(o.method);
  cfg.lambda1 = o.lambda1;
  cfg.lambda2 = o.lambda2;
  cfg.tol = o.tol;
  cfg.max_sweeps = o.max_sweeps;
  cfg.assert_monotone = o.assert_monotone;
  validate_config(cfg);

  const SortedSurvivalDataset data = sort_and_index(load_dataset(o.data, manifest));
  FitResult result;
  try {
    result = fit(data, cfg);
  } catch (const NumericError& e) {
    err << "error: training diverged: " << e.what() << "\n";
    return kExitDiverged;
  }

  const std::filesystem::path dir = o.out;
  std::ostringstream trace;
  write_trace_csv(trace, cfg, result);
  write_text(dir / "trace.csv", trace.str());

  ModelFile model{data.feature_names(), result.beta, cfg.lambda1, cfg.lambda2,
                  std::string(to_string(cfg.method)), result.final_loss};
  json j = model_to_json(model);
  j["final_objective"] = result.final_objective;
  j["converged"] = result.converged;
  j["diverged"] = result.diverged;
  j["iterations"] = result.sweeps_used;
  if (cfg.method == Method::ExactNewton) j["singular_hessian"] = result.singular_hessian;
  if (cfg.assert_monotone) {
    j["monotone_checks"] = result.monotone_checks;
    j["monotone_violations"] = result.monotone_violations;
  }
  j["manifest"] = manifest.to_json();
  write_json(dir / "model.json", j);

  if (result.diverged) {
    err << "error: " << to_string(cfg.method) << " diverged after " << result.sweeps_used
        << " iterations\n";
    return kExitDiverged;
  }
  if (!result.converged) {
    err << "warning: stopped after " << result.sweeps_used << " iterations without converging\n";
  }
  out << to_string(cfg.method) << ": loss " << std::setprecision(12) << result.final_loss
      << ", objective " << result.final_objective << ", " << result.sweeps_used << " iterations"
      << (result.converged ? " (converged)" : "") << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct BenchmarkOptions {
  DataOptions data;
  std::vector<std::string> methods = {"quad_cd", "cubic_cd", "exact_newton", "quasi_newton",
                                      "prox_newton"};
  std::vector<std::string> lambdas = {"0:1", "1:1", "0:5", "1:5"};
  double tol = 1e-7;
  int max_sweeps = 1000;
  std::string out_dir;
};

std::pair<double, double> parse_lambda_pair(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("lambda pair '" + text + "' must look like l1:l2");
  try {
    std::size_t used1 = 0;
    std::size_t used2 = 0;
    const double l1 = std::stod(text.substr(0, colon), &used1);
    const double l2 = std::stod(text.substr(colon + 1), &used2);
    if (used1 != colon || used2 != text.size() - colon - 1) throw std::invalid_argument(text);
    return {l1, l2};
  } catch (const std::logic_error&) {
    throw UsageError("lambda pair '" + text + "' must look like l1:l2");
  }
}

// True when no recorded objective exceeds its predecessor by more than the slack.
bool trace_monotone(const FitResult& result) {
  const auto& t = result.loss_trace;
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!std::isfinite(t[k].objective)) return false;
    if (t[k].objective - t[k - 1].objective > kMonotoneSlack * std::max(1.0, std::abs(t[k - 1].objective))) {
      return false;
    }
  }
  return true;
}

int cmd_benchmark(const BenchmarkOptions& o, Manifest& manifest, std::ostream& out) {
  std::vector<FitConfig> configs;
  for (const auto& lam : o.lambdas) {
    const auto [l1, l2] = parse_lambda_pair(lam);
    for (const auto& m : o.methods) {
      FitConfig cfg;
      cfg.method = parse_method(m);
      cfg.lambda1 = l1;
      cfg.lambda2 = l2;
      cfg.tol = o.tol;
      cfg.max_sweeps = o.max_sweeps;
      cfg.assert_monotone = is_coordinate_descent(cfg.method);
      configs.push_back(cfg);
    }
  }
  const SortedSurvivalDataset data = sort_and_index(load_dataset(o.data, manifest));
  const auto runs = benchmark(data, configs, configured_threads());

  const std::filesystem::path dir = o.out_dir;
  json summary = json::array();
  for (const auto& run : runs) {
    const auto& cfg = run.config;
    const std::string file = "trace_" + std::string(to_string(cfg.method)) + "_l1_" +
                             format_double(cfg.lambda1) + "_l2_" + format_double(cfg.lambda2) + ".csv";
    std::ostringstream trace;
    write_trace_csv(trace, cfg, run.result);
    write_text(dir / file, trace.str());

    std::string status;
    const bool skipped = !run.skipped_reason.empty() && !run.result.diverged;
    if (skipped) {
      status = "skipped";
    } else if (run.result.diverged) {
      status = "diverged";
    } else if (run.result.converged) {
      status = "converged";
    } else {
      status = "max_iterations";
    }
    const bool monotone = !skipped && !run.result.diverged && trace_monotone(run.result);
    json row = {{"method", to_string(cfg.method)},
                {"lambda1", cfg.lambda1},
                {"lambda2", cfg.lambda2},
                {"status", status},
                {"trace_file", file},
                {"iterations", run.result.sweeps_used},
                {"trace_monotone", monotone},
                {"blow_up", !skipped && !monotone}};
    if (!skipped && !run.result.loss_trace.empty()) {
      row["final_loss"] = run.result.final_loss;
      row["final_objective"] = run.result.final_objective;
    }
    if (cfg.assert_monotone && !skipped) row["monotone_violations"] = run.result.monotone_violations;
    if (!run.skipped_reason.empty()) row["reason"] = run.skipped_reason;
    summary.push_back(row);
    out << std::left << std::setw(13) << to_string(cfg.method) << " l1=" << std::setw(5)
        << format_double(cfg.lambda1) << " l2=" << std::setw(5) << format_double(cfg.lambda2) << " "
        << status << (row["blow_up"].get<bool>() ? " (blow-up)" : "") << "\n";
  }
  write_json(dir / "summary.json", {{"runs", summary}, {"manifest", manifest.to_json()}});
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SelectOptions {
  DataOptions data;
  std::string truth;
  std::size_t k_max = 15;
  std::size_t beam_width = 10;
  std::size_t candidates = 10;
  std::string inner = "cubic_cd";
  double inner_tol = 1e-8;
  bool warm_start = false;
  int folds = 5;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_select(const SelectOptions& o, Manifest& manifest, std::ostream& out, std::ostream& err) {
  SelectionConfig cfg;
  cfg.k_max = o.k_max;
  cfg.beam_width = o.beam_width;
  cfg.candidates_per_beam = o.candidates;
  cfg.inner_method = parse_method(o.inner);
  cfg.inner_tol = o.inner_tol;
  cfg.warm_start_candidates = o.warm_start;
  cfg.threads = configured_threads();
  if (o.folds < 1) throw UsageError("--folds must be >= 1");

  const SurvivalDataset data = load_dataset(o.data, manifest);
  validate_selection_config(cfg, data.p());

  std::optional<std::set<std::string>> truth_names;
  if (!o.truth.empty()) {
    const json truth = json::parse(read_file(o.truth));
    if (!truth.contains("support_feature_names")) {
      throw SchemaError("truth file has no support_feature_names");
    }
    truth_names = truth["support_feature_names"].get<std::set<std::string>>();
  }

  std::vector<FoldSplit> splits;
  if (o.folds == 1) {
    FoldSplit all;
    all.train.resize(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) all.train[i] = i;
    splits.push_back(std::move(all));
  } else {
    splits = kfold_split(data, o.folds, o.seed);
  }

  json paths = json::array();
  json rows = json::array();
  for (std::size_t f = 0; f < splits.size(); ++f) {
    const SortedSurvivalDataset train = sort_and_index(subset_rows(data, splits[f].train));
    std::optional<SortedSurvivalDataset> test;
    if (!splits[f].test.empty()) {
      SurvivalDataset rows_test = subset_rows(data, splits[f].test);
      if (rows_test.event_count() > 0.0) {
        test.emplace(std::move(rows_test));
      } else {
        err << "warning: fold " << f << ": test split has no events; test metrics skipped\n";
      }
    }
    const SelectionPath path = beam_search(train, cfg);
    for (const auto& w : path.warnings) err << "warning: fold " << f << ": " << w << "\n";
    paths.push_back({{"fold", f}, {"path", path_to_json(path, train.feature_names())}, {"warnings", path.warnings}});

    for (const auto& state : path.best) {
      std::optional<RecoveryScores> recovery;
      if (truth_names) {
        std::vector<std::size_t> est;
        std::vector<std::size_t> tru;
        for (std::size_t j = 0; j < train.p(); ++j) {
          const bool in_truth = truth_names->count(train.feature_names()[j]) > 0;
          if (in_truth) tru.push_back(j);
          if (state.beta[static_cast<Eigen::Index>(j)] != 0.0) est.push_back(j);
        }
        recovery = support_recovery(est, tru);
      }
      auto add_row = [&](const char* split, const SortedSurvivalDataset& eval) {
        const EvaluationMetrics m = evaluate_model(train, eval, state.beta);
        json row = {{"fold", f},
                    {"split", split},
                    {"support_size", state.support.size()},
                    {"cph_loss", m.cph_loss},
                    {"cindex", optional_json(m.cindex)},
                    {"ibs", optional_json(m.ibs)},
                    {"precision", recovery ? json(recovery->precision) : json(nullptr)},
                    {"recall", recovery ? json(recovery->recall) : json(nullptr)},
                    {"f1", recovery ? json(recovery->f1) : json(nullptr)}};
        rows.push_back(row);
      };
      add_row("train", train);
      if (test) add_row("test", *test);
    }
    out << "fold " << f << ": path up to support size " << path.best.size();
    if (!path.best.empty()) out << ", train loss " << std::setprecision(10) << path.best.back().loss;
    out << "\n";
  }

  const std::filesystem::path dir = o.out;
  const json manifest_json = manifest.to_json();
  write_json(dir / "path.json", {{"folds", paths}, {"manifest", manifest_json}});
  write_json(dir / "metrics.json", {{"rows", rows}, {"manifest", manifest_json}});
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateOptions {
  DataOptions data;
  std::string model;
  std::string train;
  std::string out;
};

int cmd_evaluate(const EvaluateOptions& o, Manifest& manifest, std::ostream& out) {
  const ModelFile model = model_from_json(json::parse(read_file(o.model)));
  SurvivalDataset raw = load_csv(o.data.path, o.data.time_col, o.data.event_col);
  manifest.dataset = dataset_fingerprint(o.data.path, raw);
  const SurvivalDataset eval_data = materialize_features(raw, model.feature_names);
  validate(eval_data);
  std::optional<SortedSurvivalDataset> train;
  if (!o.train.empty()) {
    train.emplace(materialize_features(load_csv(o.train, o.data.time_col, o.data.event_col),
                                       model.feature_names));
  }
  const SortedSurvivalDataset eval = sort_and_index(eval_data);
  const EvaluationMetrics m = evaluate_model(train ? *train : eval, eval, model.coefficients);

  json j = {{"cph_loss", m.cph_loss},
            {"cindex", optional_json(m.cindex)},
            {"ibs", optional_json(m.ibs)},
            {"n", eval.n()},
            {"events", eval.event_count()},
            {"warnings", m.warnings},
            {"manifest", manifest.to_json()}};
  if (o.out.empty()) {
    out << j.dump(2) << "\n";
  } else {
    write_json(o.out, j);
    out << "loss " << std::setprecision(12) << m.cph_loss << ", C-index "
        << (m.cindex ? std::to_string(*m.cindex) : "n/a") << ", IBS "
        << (m.ibs ? std::to_string(*m.ibs) : "n/a") << "\n";
  }
  return kExitOk;
}

}  // namespace

std::uint64_t fnv1a_64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

json dataset_fingerprint(const std::filesystem::path& path, const SurvivalDataset& data) {
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a_64(read_file(path));
  return {{"path", path.filename().string()}, {"rows", data.n()}, {"columns", data.p()}, {"fnv1a", hex.str()}};
}

json model_to_json(const ModelFile& model) {
  return {{"feature_names", model.feature_names},
          {"coefficients", vector_json(model.coefficients)},
          {"lambda1", model.lambda1},
          {"lambda2", model.lambda2},
          {"method", model.method},
          {"final_loss", model.final_loss}};
}

ModelFile model_from_json(const json& j) {
  try {
    ModelFile model;
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto coefs = j.at("coefficients").get<std::vector<double>>();
    if (coefs.size() != model.feature_names.size()) {
      throw SchemaError("model has " + std::to_string(coefs.size()) + " coefficients for " +
                        std::to_string(model.feature_names.size()) + " feature names");
    }
    model.coefficients = Eigen::Map<const Vector>(coefs.data(), static_cast<Eigen::Index>(coefs.size()));
    model.lambda1 = j.value("lambda1", 0.0);
    model.lambda2 = j.value("lambda2", 0.0);
    model.method = j.value("method", std::string());
    model.final_loss = j.value("final_loss", 0.0);
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed model file: ") + e.what());
  }
}

json path_to_json(const SelectionPath& path, const std::vector<std::string>& names) {
  json arr = json::array();
  for (const auto& state : path.best) {
    std::vector<std::string> support_names;
    std::vector<double> coefs;
    for (std::size_t j : state.support) {
      support_names.push_back(names.at(j));
      coefs.push_back(state.beta[static_cast<Eigen::Index>(j)]);
    }
    arr.push_back({{"support_size", state.support.size()},
                   {"feature_names", support_names},
                   {"coefficients", coefs},
                   {"train_loss", state.loss}});
  }
  return arr;
}

std::vector<std::string> merge_config_args(const std::vector<std::string>& args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a path");
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) return args;

  json cfg;
  try {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot open config file '" + config_path + "'");
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file '" + config_path + "' is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");

  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };

  std::vector<std::string> merged = args;
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    if (key == "config" || given(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) merged.push_back(flag);
    } else if (value.is_array()) {
      merged.push_back(flag);
      for (const auto& item : value) merged.push_back(text(item));
    } else if (!value.is_null()) {
      merged.push_back(flag);
      merged.push_back(text(value));
    }
  }
  return merged;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cox proportional hazards training with surrogate coordinate descent", "fastsurv"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", kVersion);
  std::string config_path;

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic or clinical-style dataset");
  generate->add_option("--kind", gen.kind, "synthetic or clinical")->check(CLI::IsMember({"synthetic", "clinical"}));
  generate->add_option("--n", gen.n, "Number of samples");
  generate->add_option("--p", gen.p, "Number of features (synthetic)");
  generate->add_option("--rho", gen.rho, "Feature correlation rho^|i-j| (synthetic)");
  generate->add_option("--k", gen.k, "True support size (synthetic)");
  generate->add_option("--s", gen.s, "Death-time exponent (synthetic)");
  generate->add_option("--seed", gen.seed, "Random seed");
  generate->add_option("--out", gen.out, "Output CSV; ground truth goes next to it as .truth.json")->required();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Fit one model");
  add_data_options(train_cmd, train.data);
  train_cmd->add_option("--method", train.method, "quad_cd, cubic_cd, exact_newton, quasi_newton or prox_newton");
  train_cmd->add_option("--lambda1", train.lambda1, "l1 penalty")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lambda2", train.lambda2, "Squared l2 penalty")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--tol", train.tol, "Convergence tolerance");
  train_cmd->add_option("--max-sweeps", train.max_sweeps, "Iteration limit")->check(CLI::PositiveNumber);
  train_cmd->add_flag("--assert-monotone", train.assert_monotone, "Check the objective after every coordinate update");
  train_cmd->add_option("--out", train.out, "Output directory for model.json and trace.csv")->required();

  BenchmarkOptions bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Run every method on a lambda grid");
  add_data_options(bench_cmd, bench.data);
  bench_cmd->add_option("--methods", bench.methods, "Methods to run");
  bench_cmd->add_option("--lambdas", bench.lambdas, "Penalty pairs as lambda1:lambda2");
  bench_cmd->add_option("--tol", bench.tol, "Convergence tolerance");
  bench_cmd->add_option("--max-sweeps", bench.max_sweeps, "Iteration limit per run")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out-dir", bench.out_dir, "Directory for trace files and summary.json")->required();

  SelectOptions sel;
  auto* select_cmd = app.add_subcommand("select", "Beam-search variable selection with cross-validation");
  add_data_options(select_cmd, sel.data);
  select_cmd->add_option("--truth", sel.truth, "Ground-truth JSON from generate, for precision/recall/F1");
  select_cmd->add_option("--k-max", sel.k_max, "Largest support size")->check(CLI::PositiveNumber);
  select_cmd->add_option("--beam-width", sel.beam_width, "States kept per support size")->check(CLI::PositiveNumber);
  select_cmd->add_option("--candidates", sel.candidates, "Children per state")->check(CLI::PositiveNumber);
  select_cmd->add_option("--inner", sel.inner, "quad_cd or cubic_cd")->check(CLI::IsMember({"quad_cd", "cubic_cd"}));
  select_cmd->add_option("--inner-tol", sel.inner_tol, "Tolerance for scoring and fine-tuning");
  select_cmd->add_flag("--warm-start", sel.warm_start, "Start candidate scoring from the parent's scored values");
  select_cmd->add_option("--folds", sel.folds, "Cross-validation folds (1 = fit on all data)")->check(CLI::PositiveNumber);
  select_cmd->add_option("--seed", sel.seed, "Fold shuffling seed");
  select_cmd->add_option("--out", sel.out, "Output directory for path.json and metrics.json")->required();

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a saved model on a dataset");
  evaluate->add_option("--data", ev.data.path, "Dataset CSV")->required();
  evaluate->add_option("--time-col", ev.data.time_col, "Name of the time column");
  evaluate->add_option("--event-col", ev.data.event_col, "Name of the event column (0/1)");
  evaluate->add_option("--model", ev.model, "model.json from train")->required();
  evaluate->add_option("--train", ev.train, "Dataset for the baseline hazard and censoring weights (default: --data)");
  evaluate->add_option("--out", ev.out, "Metrics JSON (default: stdout)");

  for (auto* sub : {generate, train_cmd, bench_cmd, select_cmd, evaluate}) {
    sub->add_option("--config", config_path, "JSON file with default flag values");
  }

  try {
    std::vector<std::string> merged = merge_config_args(args);
    std::reverse(merged.begin(), merged.end());
    app.parse(std::move(merged));
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    for (auto* sub : app.get_subcommands()) {
      Manifest manifest;
      manifest.command = sub->get_name();
      manifest.config = resolved_config(sub);
      if (sub == generate) return cmd_generate(gen, manifest, out);
      if (sub == train_cmd) return cmd_train(train, manifest, out, err);
      if (sub == bench_cmd) return cmd_benchmark(bench, manifest, out);
      if (sub == select_cmd) return cmd_select(sel, manifest, out, err);
      if (sub == evaluate) return cmd_evaluate(ev, manifest, out);
    }
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace fastsurv
