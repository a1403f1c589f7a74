#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "curveflow/geometry.hpp"
#include "curveflow/metrics.hpp"
#include "curveflow/schemes.hpp"

namespace curveflow::app {

/// Bad or missing configuration value; `line` is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, std::size_t line, const std::string& what);
  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

/// `key = value` lines, `#` starts a comment. Later keys override earlier ones.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in);
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  /// Plain decimals or fractions such as "1/640".
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  /// Comma-separated list of numbers.
  std::vector<double> numbers(const std::string& key) const;
  /// Keys that were never read; used to reject typos.
  std::vector<std::string> unused() const;

 private:
  struct Entry {
    std::string value;
    std::size_t line;
  };
  const Entry& at(const std::string& key) const;
  std::map<std::string, Entry> entries_;
  mutable std::map<std::string, bool> used_;
};

double parse_number(const std::string& text);

struct CurveSpec {
  std::string kind = "ellipse";  // ellipse | mikula | rectangle | file
  double a = 2.0;                // ellipse semi-axes
  double b = 1.0;
  double width = 4.0;  // rectangle
  double height = 1.0;
  std::string file;  // snapshot file for kind = file

  PolygonalCurve build(std::size_t n) const;
};

struct SimulateConfig {
  schemes::SchemeConfig scheme;
  std::size_t N = 160;
  CurveSpec curve;
  std::vector<double> snapshot_times;
  std::filesystem::path output = "out";
};

enum class PathRule { Linear, Square, TwoThirds };

struct ConvergeConfig {
  schemes::SchemeConfig scheme;  // tau unused; one run per entry of `taus`
  CurveSpec curve;
  PathRule path = PathRule::Linear;
  double path_c = 0.05;   // tau = c h, tau = c h^2 or tau = c h^(2/3)
  double n_scale = 1.0;   // N = round(n_scale / h)
  std::vector<double> taus;
  std::filesystem::path output = "out";

  double h_for(double tau) const;
  std::size_t nodes_for(double tau) const;
};

SimulateConfig simulate_config(const KeyValueFile& kv);
ConvergeConfig converge_config(const KeyValueFile& kv);

struct SnapshotData {
  double t = 0.0;
  PolygonalCurve curve;
  fem::NodalField kappa;
};

/// Header `t=<time> N=<count>`, then one `x y kappa` line per vertex, all
/// with 17 significant digits so a round trip is exact.
void write_snapshot(std::ostream& out, double t, const PolygonalCurve& curve, const fem::NodalField& kappa);
SnapshotData read_snapshot(std::istream& in);
SnapshotData read_snapshot(const std::filesystem::path& path);

struct SimulateOutcome {
  schemes::RunResult run;
  std::vector<std::filesystem::path> files;
};

/// Runs the configured scheme and writes diagnostics.csv, the snapshots and
/// manifest.json under `config.output`.
SimulateOutcome simulate(const SimulateConfig& config);

struct LevelOutcome {
  double tau = 0.0;
  double h = 0.0;
  std::size_t N = 0;
  std::optional<PolygonalCurve> terminal;
  double lambda = 0.0;
  double eta = 0.0;
  std::optional<std::string> failure;
};

struct ConvergeOutcome {
  std::vector<LevelOutcome> levels;
  std::vector<metrics::ConvergenceRow> rows;
  std::vector<std::filesystem::path> files;
  bool failed = false;
};

/// Runs every level (in parallel, capped by CURVEFLOW_THREADS), then the
/// Cauchy errors M(level j, level j+1) and orders. Writes convergence.csv,
/// multipliers.csv, per-level terminal snapshots and manifest.json.
ConvergeOutcome converge(const ConvergeConfig& config);

/// Worker count for refinement levels: CURVEFLOW_THREADS if set, else the
/// hardware concurrency; never more than `jobs`.
std::size_t worker_count(std::size_t jobs);

}  // namespace curveflow::app
