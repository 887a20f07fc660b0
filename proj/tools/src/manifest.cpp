#include "manifest.hpp"

#include <cstdio>
#include <stdexcept>

namespace hdxgeo::cli {

void PhaseClock::start(const std::string& phase) {
  if (running_) stop();
  current_ = phase;
  t0_ = std::chrono::steady_clock::now();
  running_ = true;
}

void PhaseClock::stop() {
  if (!running_) return;
  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           t0_)
                 .count();
  timings_.push_back({current_, s});
  running_ = false;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::int64_t v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "1" : "0"; }

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& columns)
    : out_(path, std::ios::binary), columns_(columns.size()), path_(path) {
  if (!out_) throw std::runtime_error("cannot open '" + path + "' for write");
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ',';
    out_ << columns[i];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw std::logic_error("row width mismatch writing " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

nlohmann::json config_echo(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = cfg.experiment;
  for (const auto& [key, value] : cfg.params) {
    std::visit([&](const auto& v) { j[key] = v; }, value);
  }
  return j;
}

nlohmann::json manifest_json(const ExperimentConfig& cfg,
                             const nlohmann::json& derived,
                             const std::vector<CheckResult>& checks,
                             const std::vector<std::string>& artifacts,
                             const std::string& status) {
  nlohmann::json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["code_version"] = kCodeVersion;
  j["config"] = config_echo(cfg);
  j["derived"] = derived;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json e;
    e["name"] = c.name;
    e["pass"] = c.pass;
    e["measured"] = c.measured;
    e["threshold"] = c.threshold;
    e["comparator"] = c.comparator;
    e["gate"] = c.gating ? "acceptance" : "calibration";
    if (!c.note.empty()) e["note"] = c.note;
    arr.push_back(e);
  }
  j["checks"] = arr;
  j["artifacts"] = artifacts;
  j["status"] = status;
  return j;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for write");
  out << content;
}

void write_timings(const std::string& path,
                   const std::vector<PhaseTiming>& timings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for write");
  for (const auto& t : timings) out << t.phase << ' ' << fmt(t.seconds) << '\n';
}

}  // namespace hdxgeo::cli
