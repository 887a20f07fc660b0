#include "config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hdxgeo::cli {

namespace {

using Schema = std::map<std::string, ParamSpec>;

Schema with_common(Schema s) {
  s["master_seed"] = {ParamType::kUint, "0", 0, 1.8e19,
                      "root seed; every phase derives child seeds from it"};
  s["output_dir"] = {ParamType::kString, "out", 0, 0,
                     "directory for manifest, timings, and CSV tables"};
  s["workers"] = {ParamType::kInt, "1", 1, 64,
                  "worker threads; results never depend on this"};
  return s;
}

const std::map<std::string, Schema>& schemas() {
  static const std::map<std::string, Schema> all = [] {
    std::map<std::string, Schema> m;

    m["tails"] = with_common({
        {"d_grid",
         {ParamType::kString, "20,50,100,200,500", 0, 0,
          "comma list of dimensions for the sandwich grid"}},
        {"t_min", {ParamType::kDouble, "0.05", 1e-6, 0.999999,
                   "first threshold of the t grid"}},
        {"t_max", {ParamType::kDouble, "0.9", 1e-6, 0.999999,
                   "last threshold of the t grid"}},
        {"t_steps",
         {ParamType::kInt, "18", 2, 100000, "number of t grid points"}},
        {"p_grid",
         {ParamType::kString, "1e-4,1e-3,1e-2,0.1,0.3,0.5,0.7,0.9", 0, 0,
          "comma list of cap measures for the inversion round trip"}},
        {"inv_tol", {ParamType::kDouble, "1e-10", 0, 1,
                     "absolute tolerance for the inversion round trip"}},
    });

    m["sphere-spectrum"] = with_common({
        {"d", {ParamType::kInt, "200", 3, 100000, "ambient dimension"}},
        {"tau", {ParamType::kDouble, "0.5", 1e-9, 0.999999,
                 "cap height defining the links"}},
        {"m", {ParamType::kInt, "1500", 2, 12000,
               "points sampled per link"}},
        {"links", {ParamType::kInt, "20", 1, 100000,
                   "number of independently sampled links"}},
        {"window", {ParamType::kDouble, "0.1", 0, 1,
                    "two-sided slack around tau/(1+tau)"}},
        {"eig_tol", {ParamType::kDouble, "1e-10", 1e-14, 1e-2,
                     "eigensolver residual tolerance"}},
        {"assert_window",
         {ParamType::kBool, "true", 0, 0,
          "gate the exit code on the per-link window check"}},
    });

    m["hdx-verify"] = with_common({
        {"n", {ParamType::kInt, "600", 50, 1000000, "number of vertices"}},
        {"eps", {ParamType::kDouble, "0.8", 1e-6, 1.0,
                 "density exponent: p = n^(eps-1)"}},
        {"eta_param", {ParamType::kDouble, "2.0", 1e-6, 1e3,
                       "dimension scale: d = eta_param * log_{4/3} n"}},
        {"d_override", {ParamType::kInt, "0", 0, 100000,
                        "use this dimension instead of the scaled one"}},
        {"p_override", {ParamType::kDouble, "0", 0, 0.999999,
                        "use this edge probability instead of n^(eps-1)"}},
        {"min_pn", {ParamType::kDouble, "10", 0, 1e9,
                    "reject configs whose expected degree is below this"}},
        {"td_tol", {ParamType::kDouble, "1e-9", 0, 1,
                    "additive tolerance of the trickle-down inequality"}},
        {"window", {ParamType::kDouble, "0.1", 0, 1,
                    "calibration slack around tau/(1+tau) for link spectra"}},
        {"assert_link_window",
         {ParamType::kBool, "false", 0, 0,
          "gate the exit code on the per-link window (calibration)"}},
        {"assert_skeleton_window",
         {ParamType::kBool, "false", 0, 0,
          "gate the exit code on the skeleton window (calibration)"}},
        {"eig_tol", {ParamType::kDouble, "1e-10", 1e-14, 1e-2,
                     "eigensolver residual tolerance"}},
        {"pair_budget", {ParamType::kUint, "500000000", 1, 1e18,
                         "maximum pairwise evaluations when sampling"}},
    });

    m["tightness"] = with_common({
        {"lambda_target", {ParamType::kDouble, "0.3333333333333333", 0.05,
                           0.499999, "target link eigenvalue bound"}},
        {"n", {ParamType::kInt, "20000", 100, 1000000,
               "number of vertices"}},
        {"d", {ParamType::kInt, "20", 4, 100000, "ambient dimension"}},
        {"attempts", {ParamType::kInt, "5", 1, 100,
                      "resampling attempts if the skeleton disconnects"}},
        {"tv_threshold", {ParamType::kDouble, "0.05", 0, 1,
                          "bound on TV(stationary, uniform)"}},
        {"skeleton_slack", {ParamType::kDouble, "0.1", 0, 1,
                            "skeleton check: lambda2 >= tau - slack"}},
        {"link_slack", {ParamType::kDouble, "0.1", 0, 1,
                        "link check: |lambda|_2 <= lambda_target + slack"}},
        {"link_sample", {ParamType::kInt, "0", 0, 1000000,
                         "how many links to examine (0 = all)"}},
        {"assert_links",
         {ParamType::kBool, "true", 0, 0,
          "gate the exit code on the per-link bound"}},
        {"eig_tol", {ParamType::kDouble, "1e-10", 1e-14, 1e-2,
                     "eigensolver residual tolerance"}},
        {"pair_budget", {ParamType::kUint, "500000000", 1, 1e18,
                         "maximum pairwise evaluations when sampling"}},
    });

    m["mixing"] = with_common({
        {"d", {ParamType::kInt, "100", 2, 100000, "ambient dimension"}},
        {"tau", {ParamType::kDouble, "0.5", 1e-9, 0.999999,
                 "cap height of the walk kernel"}},
        {"k_max", {ParamType::kInt, "8", 1, 64, "walk steps measured"}},
        {"trials", {ParamType::kUint, "100000", 100, 1e9,
                    "independent walk trajectories"}},
        {"bins", {ParamType::kInt, "100", 10, 100000,
                  "projection histogram bins"}},
        {"ratio_factor", {ParamType::kDouble, "1.25", 0, 100,
                          "decay check: ratio <= factor * tau"}},
        {"signal_factor", {ParamType::kDouble, "2.0", 1, 100,
                           "a TV value counts once it exceeds factor *"
                           " noise floor"}},
        {"assert_decay", {ParamType::kBool, "true", 0, 0,
                          "gate the exit code on the decay ratio check"}},
    });

    m["walk-combinatorics"] = with_common({
        {"ell_max", {ParamType::kInt, "6", 2, 8, "maximum walk length"}},
        {"labels_max", {ParamType::kInt, "5", 2, 6, "maximum label count"}},
        {"budget", {ParamType::kUint, "10000000", 1, 1e12,
                    "enumeration budget in sequences"}},
        {"forest_count", {ParamType::kInt, "20", 1, 1000,
                          "random forest patterns to test"}},
        {"forest_d", {ParamType::kInt, "15", 3, 10000,
                      "dimension for the forest estimates"}},
        {"forest_p", {ParamType::kDouble, "0.3", 1e-6, 0.999999,
                      "cap measure for the forest estimates"}},
        {"forest_trials", {ParamType::kUint, "100000", 100, 1e9,
                           "Monte Carlo trials per forest"}},
        {"tri_d", {ParamType::kInt, "80", 3, 10000,
                   "dimension for the triangle estimate"}},
        {"tri_p", {ParamType::kDouble, "0.05", 1e-6, 0.999999,
                   "cap measure for the triangle estimate"}},
        {"tri_trials", {ParamType::kUint, "1000000", 100, 1e10,
                        "Monte Carlo trials for the triangle estimate"}},
        {"tri_factor", {ParamType::kDouble, "1.5", 0, 100,
                        "upper window factor on tau sqrt(log(1/p)/2)"}},
    });

    m["shell-analysis"] = with_common({
        {"d", {ParamType::kInt, "400", 4, 100000, "ambient dimension"}},
        {"m", {ParamType::kInt, "1500", 2, 12000, "shells per resample"}},
        {"tau", {ParamType::kDouble, "0.5", 1e-9, 0.999999, "cap height"}},
        {"gamma", {ParamType::kDouble, "1.0", 1e-6, 100,
                   "confidence exponent of the eta quantile"}},
        {"resamples", {ParamType::kInt, "100", 1, 100000,
                       "independent shell vectors"}},
        {"freq_required", {ParamType::kInt, "95", 0, 100000,
                           "resamples that must pass each frequency check"}},
        {"c_spec", {ParamType::kDouble, "3.0", 0, 100,
                    "spectral threshold factor on log(d)/sqrt(d)"}},
        {"c_l1", {ParamType::kDouble, "3.0", 0, 100,
                  "row-difference threshold factor on log^2(d)/d"}},
        {"c_mass", {ParamType::kDouble, "3.0", 0, 100,
                    "outlier mass threshold factor on 1/d"}},
        {"nd_factor", {ParamType::kDouble, "5.0", 0, 100,
                       "outlier integral ratio threshold factor on 1/d"}},
        {"appc_factor", {ParamType::kDouble, "10.0", 0, 1000,
                         "ratio identity threshold factor on alpha^2"}},
        {"triples", {ParamType::kInt, "100", 1, 100000,
                     "sampled shell triples per resample"}},
    });

    return m;
  }();
  return all;
}

[[noreturn]] void bad(const std::string& msg) {
  throw std::invalid_argument(msg);
}

std::string upper_key(const std::string& key) {
  std::string out = "HDXGEO_";
  for (char c : key) out += static_cast<char>(std::toupper(c));
  return out;
}

ParamValue parse_text(const std::string& key, const ParamSpec& spec,
                      const std::string& text) {
  auto unparsable = [&]() {
    bad("config field '" + key + "': cannot parse '" + text + "'");
  };
  std::size_t pos = 0;
  switch (spec.type) {
    case ParamType::kInt: {
      std::int64_t v = 0;
      try {
        v = std::stoll(text, &pos);
      } catch (const std::logic_error&) {
        unparsable();
      }
      if (pos != text.size()) unparsable();
      return v;
    }
    case ParamType::kUint: {
      std::uint64_t v = 0;
      if (!text.empty() && text[0] == '-') unparsable();
      try {
        v = std::stoull(text, &pos);
      } catch (const std::logic_error&) {
        unparsable();
      }
      if (pos != text.size()) unparsable();
      return v;
    }
    case ParamType::kDouble: {
      double v = 0.0;
      try {
        v = std::stod(text, &pos);
      } catch (const std::logic_error&) {
        unparsable();
      }
      if (pos != text.size()) unparsable();
      return v;
    }
    case ParamType::kBool:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      bad("config field '" + key + "': expected a boolean, got '" + text +
          "'");
    case ParamType::kString:
      return text;
  }
  bad("config field '" + key + "': unhandled type");
}

ParamValue parse_json_value(const std::string& key, const ParamSpec& spec,
                            const nlohmann::json& v) {
  switch (spec.type) {
    case ParamType::kInt:
      if (v.is_number_integer())
        return static_cast<std::int64_t>(v.get<std::int64_t>());
      bad("config field '" + key + "': expected an integer");
    case ParamType::kUint:
      if (v.is_number_unsigned() || (v.is_number_integer() &&
                                     v.get<std::int64_t>() >= 0))
        return v.get<std::uint64_t>();
      bad("config field '" + key + "': expected a nonnegative integer");
    case ParamType::kDouble:
      if (v.is_number()) return v.get<double>();
      bad("config field '" + key + "': expected a number");
    case ParamType::kBool:
      if (v.is_boolean()) return v.get<bool>();
      bad("config field '" + key + "': expected a boolean");
    case ParamType::kString:
      if (v.is_string()) return v.get<std::string>();
      bad("config field '" + key + "': expected a string");
  }
  bad("config field '" + key + "': unhandled type");
}

void check_range(const std::string& key, const ParamSpec& spec,
                 const ParamValue& v) {
  double x = 0.0;
  switch (spec.type) {
    case ParamType::kInt:
      x = static_cast<double>(std::get<std::int64_t>(v));
      break;
    case ParamType::kUint:
      x = static_cast<double>(std::get<std::uint64_t>(v));
      break;
    case ParamType::kDouble:
      x = std::get<double>(v);
      break;
    default:
      return;
  }
  if (!(x >= spec.min && x <= spec.max)) {
    std::ostringstream os;
    os << "config field '" << key << "': value " << x << " outside ["
       << spec.min << ", " << spec.max << "]";
    bad(os.str());
  }
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, schema] : schemas()) v.push_back(name);
    return v;
  }();
  return names;
}

const std::map<std::string, ParamSpec>& schema_for(
    const std::string& experiment) {
  auto it = schemas().find(experiment);
  if (it == schemas().end())
    bad("unknown experiment '" + experiment + "'");
  return it->second;
}

ExperimentConfig resolve_config(
    const std::string& experiment, const std::string& config_path,
    std::optional<std::uint64_t> seed_override,
    std::optional<std::string> out_override,
    std::optional<int> workers_override) {
  const Schema& schema = schema_for(experiment);

  ExperimentConfig cfg;
  cfg.experiment = experiment;
  for (const auto& [key, spec] : schema)
    cfg.params[key] = parse_text(key, spec, spec.def);

  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) bad("cannot open config file '" + config_path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      bad("config file '" + config_path + "': " + e.what());
    }
    if (!j.is_object())
      bad("config file '" + config_path + "': expected a flat JSON object");
    for (const auto& [key, value] : j.items()) {
      auto it = schema.find(key);
      if (it == schema.end())
        bad("config field '" + key + "' is not a parameter of experiment '" +
            experiment + "'");
      if (!value.is_primitive() || value.is_null())
        bad("config field '" + key + "': nested values are not allowed");
      cfg.params[key] = parse_json_value(key, it->second, value);
    }
  }

  for (const auto& [key, spec] : schema) {
    if (const char* env = std::getenv(upper_key(key).c_str()))
      cfg.params[key] = parse_text(key, spec, env);
  }

  if (seed_override) cfg.params["master_seed"] = *seed_override;
  if (out_override) cfg.params["output_dir"] = *out_override;
  if (workers_override)
    cfg.params["workers"] = static_cast<std::int64_t>(*workers_override);

  for (const auto& [key, spec] : schema) check_range(key, spec, cfg.params[key]);

  cfg.master_seed = std::get<std::uint64_t>(cfg.params["master_seed"]);
  cfg.output_dir = std::get<std::string>(cfg.params["output_dir"]);
  cfg.workers =
      static_cast<int>(std::get<std::int64_t>(cfg.params["workers"]));
  return cfg;
}

namespace {

const ParamValue& fetch(const ExperimentConfig& c, const std::string& key) {
  auto it = c.params.find(key);
  if (it == c.params.end())
    throw std::logic_error("parameter '" + key + "' missing from config");
  return it->second;
}

}  // namespace

std::int64_t get_int(const ExperimentConfig& c, const std::string& key) {
  return std::get<std::int64_t>(fetch(c, key));
}
std::uint64_t get_uint(const ExperimentConfig& c, const std::string& key) {
  return std::get<std::uint64_t>(fetch(c, key));
}
double get_double(const ExperimentConfig& c, const std::string& key) {
  return std::get<double>(fetch(c, key));
}
bool get_bool(const ExperimentConfig& c, const std::string& key) {
  return std::get<bool>(fetch(c, key));
}
const std::string& get_string(const ExperimentConfig& c,
                              const std::string& key) {
  return std::get<std::string>(fetch(c, key));
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  if (out.empty()) bad("empty list value '" + csv + "'");
  return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) bad("empty list value '" + csv + "'");
  return out;
}

std::string help_text() {
  static const std::map<std::string, std::string> columns = {
      {"tails",
       "  tails.csv: d,t,tail,lower,upper,in_sandwich\n"
       "  inversion.csv: d,p,tau,roundtrip_err\n"},
      {"sphere-spectrum",
       "  links.csv: link,m,effective,edges,empty,connected,lambda2\n"},
      {"hdx-verify",
       "  links.csv: vertex,link_vertices,link_edges,empty,connected,"
       "lambda2\n"},
      {"tightness",
       "  links.csv: vertex,link_vertices,link_edges,empty,connected,"
       "lambda2\n"},
      {"mixing", "  decay.csv: k,tv,ratio,usable,bound,checked,ok\n"},
      {"walk-combinatorics",
       "  classes.csv: ell,labels,distinct_edges,singletons,excess,count,"
       "bound\n"
       "  subgraphs.csv: kind,vertices,edges,d,p,trials,estimate,ci_low,"
       "ci_high,target_low,target_high,pass\n"},
      {"shell-analysis",
       "  resamples.csv: resample,lambda_deflated,spec_pass,row_err,"
       "max_l1,max_l1_sq,outlier_mass,outlier_count,all_below_eta,"
       "nd_ratio,max_t_dev,max_ab_dev\n"},
  };
  std::ostringstream os;
  os << "Experiments and parameters (config file: flat JSON object;\n"
        "environment overrides: HDXGEO_<UPPERCASE_KEY>):\n\n";
  for (const auto& [name, schema] : schemas()) {
    os << name << "\n";
    for (const auto& [key, spec] : schema) {
      os << "  " << key << " (default " << spec.def << "): " << spec.doc
         << "\n";
    }
    auto it = columns.find(name);
    if (it != columns.end()) os << "  CSV columns:\n" << it->second;
    os << "\n";
  }
  os << "Every run writes manifest.json (schema_version 1, deterministic)\n"
        "and timings.txt (wall clock, excluded from the determinism\n"
        "contract) into the output directory.\n";
  return os.str();
}

}  // namespace hdxgeo::cli
