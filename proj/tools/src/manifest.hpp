#pragma once

#include <chrono>
#include <fstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace hdxgeo::cli {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string comparator = "<=";
  // Calibration checks are recorded in the manifest but do not gate the
  // exit code.
  bool gating = true;
  std::string note;
};

struct PhaseTiming {
  std::string phase;
  double seconds = 0.0;
};

// Wall-clock phases.  Timings go to a sidecar file, never into the
// deterministic manifest.
class PhaseClock {
 public:
  void start(const std::string& phase);
  void stop();
  const std::vector<PhaseTiming>& timings() const { return timings_; }

 private:
  std::vector<PhaseTiming> timings_;
  std::string current_;
  std::chrono::steady_clock::time_point t0_;
  bool running_ = false;
};

std::string fmt(double v);  // %.17g, bit-faithful and locale-free
std::string fmt(int v);
std::string fmt(std::int64_t v);
std::string fmt(std::uint64_t v);
std::string fmt(bool v);  // "1" / "0"

// Line-oriented CSV with a fixed header; "\n" endings; cells preformatted.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::string path_;
};

nlohmann::json config_echo(const ExperimentConfig& cfg);

// Deterministic manifest document; keys are sorted by construction.
nlohmann::json manifest_json(const ExperimentConfig& cfg,
                             const nlohmann::json& derived,
                             const std::vector<CheckResult>& checks,
                             const std::vector<std::string>& artifacts,
                             const std::string& status);

void write_text(const std::string& path, const std::string& content);
void write_timings(const std::string& path,
                   const std::vector<PhaseTiming>& timings);

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kCodeVersion = "hdxgeo 1.0.0";

}  // namespace hdxgeo::cli
