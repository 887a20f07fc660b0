#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hdxgeo::cli {

enum class ParamType { kInt, kUint, kDouble, kBool, kString };

struct ParamSpec {
  ParamType type = ParamType::kDouble;
  std::string def;  // default, textual form
  double min = -1e300;
  double max = 1e300;
  std::string doc;
};

using ParamValue =
    std::variant<std::int64_t, std::uint64_t, double, bool, std::string>;

// Resolved run configuration: every schema key present and validated.
// master_seed / output_dir / workers are common keys lifted out of the map
// for convenience; they also stay in `params` for the manifest echo.
struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, ParamValue> params;
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";
  int workers = 1;
};

const std::vector<std::string>& experiment_names();
const std::map<std::string, ParamSpec>& schema_for(
    const std::string& experiment);

// Resolution order: schema defaults, then the config file (flat JSON
// object), then HDXGEO_<KEY> environment overrides, then explicit CLI
// overrides.  Unknown keys, type mismatches, and range violations raise
// std::invalid_argument naming the offending field.
ExperimentConfig resolve_config(
    const std::string& experiment, const std::string& config_path,
    std::optional<std::uint64_t> seed_override,
    std::optional<std::string> out_override,
    std::optional<int> workers_override);

std::int64_t get_int(const ExperimentConfig& c, const std::string& key);
std::uint64_t get_uint(const ExperimentConfig& c, const std::string& key);
double get_double(const ExperimentConfig& c, const std::string& key);
bool get_bool(const ExperimentConfig& c, const std::string& key);
const std::string& get_string(const ExperimentConfig& c,
                              const std::string& key);

std::vector<int> parse_int_list(const std::string& csv);
std::vector<double> parse_double_list(const std::string& csv);

// Full per-experiment parameter and CSV column documentation.
std::string help_text();

}  // namespace hdxgeo::cli
