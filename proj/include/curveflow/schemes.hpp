#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "curveflow/femcore.hpp"
#include "curveflow/geometry.hpp"
#include "curveflow/metrics.hpp"

namespace curveflow::schemes {

using fem::Mode;

enum class SchemeKind {
  SpEuler,
  SpCrankNicolson,
  SpBdf2,
  SpBdf2Variant,  // first-order perimeter equation; kept for the order-loss experiment
  PdBdf2,
  ApBdf,          // order from SchemeConfig::bdf_order
};

std::string_view scheme_name(SchemeKind kind);
SchemeKind parse_scheme(std::string_view name);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::SpBdf2;
  double tau = 0.0;
  double T = 0.0;
  double tol = 1e-10;
  std::optional<double> gamma;  // modification threshold; 50 * tau when unset
  std::size_t max_newton = 100;
  int bdf_order = 2;

  double threshold() const { return gamma.value_or(50.0 * tau); }
  /// Number of time steps T / tau.
  std::size_t steps() const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// max_newton iterations without meeting the tolerance.
class NewtonDivergedError : public std::runtime_error {
 public:
  NewtonDivergedError(std::size_t iterations, double last_update);
  double last_update() const noexcept { return last_update_; }

 private:
  double last_update_;
};

/// BDF coefficients delta_0..delta_k of sum_{l=1..k} (1 - z)^l / l, 1 <= k <= 6.
std::vector<double> bdf_coefficients(int k);

struct NewtonResult {
  fem::Iterate iterate;
  std::size_t iterations = 0;
  double update_norm = 0.0;
};

/// Newton iteration on one step context, stopping once the max-norm of the
/// update (over X, kappa and the active multipliers) is at most tol.
NewtonResult newton_outer(const fem::StepContext& context, fem::Iterate start, double tol, std::size_t max_newton);

struct HistoryEntry {
  PolygonalCurve curve;
  fem::NodalField kappa;
  double lambda = 0.0;
  double eta = 0.0;
  double L = 0.0;
  double A = 0.0;

  HistoryEntry(PolygonalCurve c, fem::NodalField k, double lam, double et);
  Eigen::VectorXd x() const { return curve.coordinates(); }
};

struct SchemeState {
  std::deque<HistoryEntry> history;  // front is the newest level
  std::size_t step = 0;              // index m of the newest level
  double tau = 0.0;
  double A0 = 0.0;
  double L0 = 0.0;
  Mode mode = Mode::StructurePreserving;

  const HistoryEntry& newest() const { return history.front(); }
  double time() const { return static_cast<double>(step) * tau; }
};

struct StepReport {
  std::size_t newton_iterations = 0;
  double final_update_norm = 0.0;
  double deltaL = 0.0;
  double lambda = 0.0;
  double eta = 0.0;
  Mode mode = Mode::StructurePreserving;
};

struct StepOutcome {
  SchemeState state;
  StepReport report;
};

/// One step of the configured scheme in the state's current mode.
StepOutcome step(const SchemeState& state, const SchemeConfig& config);

StepOutcome step_sp_euler(const SchemeState& state, const SchemeConfig& config);
StepOutcome step_sp_cn(const SchemeState& state, const SchemeConfig& config);
StepOutcome step_sp_bdf2(const SchemeState& state, const SchemeConfig& config);
StepOutcome step_sp_bdf2_variant(const SchemeState& state, const SchemeConfig& config);
StepOutcome step_pd_bdf2(const SchemeState& state, const SchemeConfig& config);
StepOutcome step_ap_bdfk(const SchemeState& state, const SchemeConfig& config, int k);

/// Initial level (curvature by least squares, zero multipliers) plus the
/// extra levels a multistep scheme needs. Reports cover the startup steps.
struct StartupResult {
  SchemeState state;
  std::vector<StepReport> reports;
};
StartupResult startup(const SchemeConfig& config, const PolygonalCurve& initial);

/// Substeps per startup interval for AP-BDFk (1 for k <= 2).
std::size_t startup_substeps(double tau, int k);

struct Snapshot {
  double t = 0.0;
  std::size_t step = 0;
  PolygonalCurve curve;
  fem::NodalField kappa;
};

struct RunResult {
  metrics::DiagnosticsSeries series;
  std::vector<Snapshot> snapshots;
  std::optional<double> switch_time;
  bool forced_switch = false;
  std::optional<std::string> failure;
  SchemeState final_state;
};

/// Full run to T. SP schemes apply the modification procedure: once
/// |L^{m+1} - L^m| / tau <= gamma (or the two-multiplier system degenerates)
/// lambda is fixed at 0, the perimeter equation is dropped and the run
/// continues with the matching area-preserving scheme. Step failures stop
/// the run and are reported in `failure` with the partial series kept.
RunResult run_modified(const SchemeConfig& config, const PolygonalCurve& initial,
                       const std::vector<double>& snapshot_times = {});

}  // namespace curveflow::schemes
