#pragma once

#include "fastsurv/beam_search.hpp"
#include "fastsurv/optimizers.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fastsurv {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitDiverged = 3,
};

/// Runs one command line (without the program name). Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Appends `--key value` for every key of the JSON object named by
/// `--config` that is not already given on the command line.
std::vector<std::string> merge_config_args(const std::vector<std::string>& args);

std::uint64_t fnv1a_64(std::string_view bytes);

/// {rows, columns, fnv1a} of a dataset file.
nlohmann::json dataset_fingerprint(const std::filesystem::path& path, const SurvivalDataset& data);

struct ModelFile {
  std::vector<std::string> feature_names;
  Vector coefficients;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::string method;
  double final_loss = 0.0;
};

nlohmann::json model_to_json(const ModelFile& model);
/// Throws SchemaError when fields are missing or inconsistent.
ModelFile model_from_json(const nlohmann::json& j);

/// [{support_size, feature_names, coefficients, train_loss}, ...]; only the
/// support entries are listed.
nlohmann::json path_to_json(const SelectionPath& path, const std::vector<std::string>& names);

}  // namespace fastsurv
