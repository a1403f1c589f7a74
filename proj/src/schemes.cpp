#include "curveflow/schemes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "curveflow/linalg.hpp"

namespace curveflow::schemes {
namespace {

enum class Discretization { Euler, CrankNicolson, Bdf, Bdf2Variant };

bool perimeter_law(Mode m) { return m != Mode::AreaPreserving; }
bool area_law(Mode m) { return m != Mode::PerimeterDecreasing; }

struct Advanced {
  HistoryEntry entry;
  NewtonResult newton;
};

// Newton from the previous level; when the perimeter law is active and that
// start fails (rough curves with a large first multiplier), restart from the
// area-law solution of the same step, which is always well behaved.
NewtonResult solve_step(const fem::StepContext& ctx, fem::Iterate start, const SchemeConfig& cfg) {
  if (!perimeter_law(ctx.mode)) return newton_outer(ctx, std::move(start), cfg.tol, cfg.max_newton);
  std::size_t spent = 0;
  try {
    return newton_outer(ctx, start, cfg.tol, cfg.max_newton);
  } catch (const NewtonDivergedError&) {
    spent = cfg.max_newton;
  } catch (const linalg::SchurDegeneracyError&) {
    throw;
  } catch (const linalg::SingularSystemError&) {
    spent = cfg.max_newton;
  }
  fem::StepContext area_ctx = ctx;
  area_ctx.mode = Mode::AreaPreserving;
  fem::Iterate area_start = start;
  area_start.lambda = 0.0;
  area_start.eta = 0.0;
  NewtonResult warm = newton_outer(area_ctx, std::move(area_start), cfg.tol, cfg.max_newton);
  warm.iterate.lambda = 0.0;
  if (!area_law(ctx.mode)) warm.iterate.eta = 0.0;
  NewtonResult nr = newton_outer(ctx, std::move(warm.iterate), cfg.tol, cfg.max_newton);
  nr.iterations += spent + warm.iterations;
  return nr;
}

Advanced advance(const std::deque<HistoryEntry>& history, Discretization disc, int order, Mode mode, double tau,
                 double area_target, const SchemeConfig& cfg) {
  if (disc == Discretization::Bdf && order == 1) disc = Discretization::Euler;
  const int depth = disc == Discretization::Bdf ? order : disc == Discretization::Bdf2Variant ? 2 : 1;
  if (static_cast<int>(history.size()) < depth) {
    throw std::logic_error("scheme needs " + std::to_string(depth) + " history levels");
  }
  const HistoryEntry& cur = history.front();
  const Eigen::VectorXd x_cur = cur.x();

  // Reference (predicted) geometry on which all forms are assembled.
  Eigen::VectorXd reference = x_cur;
  if (disc == Discretization::CrankNicolson) {
    reference = advance(history, Discretization::Euler, 1, mode, 0.5 * tau, area_target, cfg).entry.x();
  } else if (disc == Discretization::Bdf || disc == Discretization::Bdf2Variant) {
    const int lower = (disc == Discretization::Bdf ? order : 2) - 1;
    reference = advance(history, Discretization::Bdf, lower, mode, tau, area_target, cfg).entry.x();
  }

  fem::StepContext ctx{.mode = mode,
                       .tau = tau,
                       .theta = 1.0,
                       .reference = fem::ReferenceGeometry::of(reference),
                       .x_coef = 1.0,
                       .x_history = -x_cur,
                       .perimeter_coef = 1.0,
                       .perimeter_history = -cur.L,
                       .area_target = area_target,
                       .previous = {}};

  if (disc == Discretization::CrankNicolson) {
    ctx.theta = 0.5;
    ctx.previous = {x_cur, cur.kappa, perimeter_law(mode) ? cur.lambda : 0.0, area_law(mode) ? cur.eta : 0.0};
  } else if (disc == Discretization::Bdf || disc == Discretization::Bdf2Variant) {
    const int k = disc == Discretization::Bdf ? order : 2;
    const auto delta = bdf_coefficients(k);
    ctx.x_coef = delta[0];
    ctx.x_history.setZero();
    double l_hist = 0.0;
    for (int i = 1; i <= k; ++i) {
      const HistoryEntry& e = history[static_cast<std::size_t>(i - 1)];
      ctx.x_history += delta[static_cast<std::size_t>(i)] * e.x();
      l_hist += delta[static_cast<std::size_t>(i)] * e.L;
    }
    if (disc == Discretization::Bdf) {
      ctx.perimeter_coef = delta[0];
      ctx.perimeter_history = l_hist;
    }
  }

  fem::Iterate start{x_cur, cur.kappa, perimeter_law(mode) ? cur.lambda : 0.0, area_law(mode) ? cur.eta : 0.0};
  NewtonResult nr = solve_step(ctx, std::move(start), cfg);
  HistoryEntry entry(PolygonalCurve::from_coordinates(nr.iterate.x), nr.iterate.kappa, nr.iterate.lambda,
                     nr.iterate.eta);
  return {std::move(entry), std::move(nr)};
}

std::size_t required_depth(const SchemeConfig& cfg) {
  switch (cfg.kind) {
    case SchemeKind::SpEuler:
    case SchemeKind::SpCrankNicolson: return 1;
    case SchemeKind::SpBdf2:
    case SchemeKind::SpBdf2Variant:
    case SchemeKind::PdBdf2: return 2;
    case SchemeKind::ApBdf: return static_cast<std::size_t>(cfg.bdf_order);
  }
  return 1;
}

Mode initial_mode(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::PdBdf2: return Mode::PerimeterDecreasing;
    case SchemeKind::ApBdf: return Mode::AreaPreserving;
    default: return Mode::StructurePreserving;
  }
}

StepOutcome advance_state(const SchemeState& state, const SchemeConfig& cfg, Discretization disc, int order,
                          Mode mode) {
  Advanced adv = advance(state.history, disc, order, mode, state.tau, state.A0, cfg);
  StepOutcome out{state, {}};
  out.report = {.newton_iterations = adv.newton.iterations,
                .final_update_norm = adv.newton.update_norm,
                .deltaL = (adv.entry.L - state.newest().L) / state.tau,
                .lambda = adv.entry.lambda,
                .eta = adv.entry.eta,
                .mode = mode};
  out.state.history.push_front(std::move(adv.entry));
  const std::size_t keep = std::max<std::size_t>(required_depth(cfg), 1);
  while (out.state.history.size() > keep) out.state.history.pop_back();
  out.state.step = state.step + 1;
  out.state.mode = mode;
  return out;
}

}  // namespace

std::string_view scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::SpEuler: return "sp-euler";
    case SchemeKind::SpCrankNicolson: return "sp-cn";
    case SchemeKind::SpBdf2: return "sp-bdf2";
    case SchemeKind::SpBdf2Variant: return "sp-bdf2-variant";
    case SchemeKind::PdBdf2: return "pd-bdf2";
    case SchemeKind::ApBdf: return "ap-bdf";
  }
  return "?";
}

SchemeKind parse_scheme(std::string_view name) {
  for (auto k : {SchemeKind::SpEuler, SchemeKind::SpCrankNicolson, SchemeKind::SpBdf2, SchemeKind::SpBdf2Variant,
                 SchemeKind::PdBdf2, SchemeKind::ApBdf}) {
    if (scheme_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

std::size_t SchemeConfig::steps() const { return static_cast<std::size_t>(std::llround(T / tau)); }

void SchemeConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  const double ratio = T / tau;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("T/tau must be an integer (got " + std::to_string(ratio) + ")");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (gamma && !(*gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
  if (max_newton < 1) throw std::invalid_argument("max_newton must be at least 1");
  if (bdf_order < 1 || bdf_order > 4) throw std::invalid_argument("bdf_order must lie in 1..4");
}

NewtonDivergedError::NewtonDivergedError(std::size_t iterations, double last_update)
    : std::runtime_error("Newton iteration did not converge in " + std::to_string(iterations) +
                         " iterations (last update " + [last_update] {
                           std::ostringstream os;
                           os << std::scientific << std::setprecision(3) << last_update;
                           return os.str();
                         }() + ")"),
      last_update_(last_update) {}

std::vector<double> bdf_coefficients(int k) {
  if (k < 1 || k > 6) throw std::invalid_argument("BDF order must lie in 1..6");
  // Exact integer numerators over lcm(1..6) = 60.
  constexpr std::int64_t denom = 60;
  std::vector<std::int64_t> num(static_cast<std::size_t>(k) + 1, 0);
  for (int l = 1; l <= k; ++l) {
    std::int64_t binom = 1;  // C(l, i)
    for (int i = 0; i <= l; ++i) {
      const std::int64_t sign = (i % 2 == 0) ? 1 : -1;
      num[static_cast<std::size_t>(i)] += sign * binom * (denom / l);
      binom = binom * (l - i) / (i + 1);
    }
  }
  std::vector<double> delta(num.size());
  std::transform(num.begin(), num.end(), delta.begin(),
                 [](std::int64_t v) { return static_cast<double>(v) / static_cast<double>(denom); });
  // Rounding the quotients breaks the zero sum by an ulp; absorb that in the
  // last coefficient so the left-to-right floating-point sum is exactly zero.
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < delta.size(); ++i) partial += delta[i];
  delta.back() = -partial;
  return delta;
}

NewtonResult newton_outer(const fem::StepContext& context, fem::Iterate start, double tol, std::size_t max_newton) {
  const Eigen::Index n = context.reference.nodes();
  const bool per = perimeter_law(context.mode);
  const bool area = area_law(context.mode);
  NewtonResult result{std::move(start), 0, 0.0};
  fem::Iterate& it = result.iterate;
  for (std::size_t i = 1; i <= max_newton; ++i) {
    const fem::NewtonBlocks blocks = fem::assemble_newton_blocks(context, it);
    const Eigen::VectorXd z = linalg::solve_bordered(fem::to_bordered_system(blocks, context.mode));
    it.x += z.head(2 * n);
    it.kappa += z.segment(2 * n, n);
    Eigen::Index k = 3 * n;
    if (per) it.lambda += z[k++];
    if (area) it.eta += z[k++];
    result.iterations = i;
    result.update_norm = z.cwiseAbs().maxCoeff();
    if (!std::isfinite(result.update_norm)) throw NewtonDivergedError(i, result.update_norm);
    if (result.update_norm <= tol) return result;
  }
  throw NewtonDivergedError(max_newton, result.update_norm);
}

HistoryEntry::HistoryEntry(PolygonalCurve c, fem::NodalField k, double lam, double et)
    : curve(std::move(c)), kappa(std::move(k)), lambda(lam), eta(et), L(perimeter(curve)), A(signed_area(curve)) {}

StepOutcome step_sp_euler(const SchemeState& state, const SchemeConfig& config) {
  return advance_state(state, config, Discretization::Euler, 1, Mode::StructurePreserving);
}

StepOutcome step_sp_cn(const SchemeState& state, const SchemeConfig& config) {
  return advance_state(state, config, Discretization::CrankNicolson, 1, Mode::StructurePreserving);
}

StepOutcome step_sp_bdf2(const SchemeState& state, const SchemeConfig& config) {
  return advance_state(state, config, Discretization::Bdf, 2, Mode::StructurePreserving);
}

StepOutcome step_sp_bdf2_variant(const SchemeState& state, const SchemeConfig& config) {
  return advance_state(state, config, Discretization::Bdf2Variant, 2, Mode::StructurePreserving);
}

StepOutcome step_pd_bdf2(const SchemeState& state, const SchemeConfig& config) {
  return advance_state(state, config, Discretization::Bdf, 2, Mode::PerimeterDecreasing);
}

StepOutcome step_ap_bdfk(const SchemeState& state, const SchemeConfig& config, int k) {
  if (k < 1 || k > 4) throw std::invalid_argument("AP-BDF order must lie in 1..4");
  return advance_state(state, config, Discretization::Bdf, k, Mode::AreaPreserving);
}

StepOutcome step(const SchemeState& state, const SchemeConfig& config) {
  const Mode mode = state.mode;
  switch (config.kind) {
    case SchemeKind::SpEuler: return advance_state(state, config, Discretization::Euler, 1, mode);
    case SchemeKind::SpCrankNicolson: return advance_state(state, config, Discretization::CrankNicolson, 1, mode);
    case SchemeKind::SpBdf2: return advance_state(state, config, Discretization::Bdf, 2, mode);
    case SchemeKind::SpBdf2Variant:
      // without the perimeter equation the variant is plain BDF2
      return advance_state(state, config,
                           mode == Mode::StructurePreserving ? Discretization::Bdf2Variant : Discretization::Bdf, 2,
                           mode);
    case SchemeKind::PdBdf2: return advance_state(state, config, Discretization::Bdf, 2, mode);
    case SchemeKind::ApBdf: return advance_state(state, config, Discretization::Bdf, config.bdf_order, mode);
  }
  throw std::logic_error("unknown scheme");
}

std::size_t startup_substeps(double tau, int k) {
  if (k <= 2) return 1;
  // global error of the order-(k-1) sub-run: (tau/n)^(k-1) <= tau^k
  return static_cast<std::size_t>(std::ceil(std::pow(tau, -1.0 / (k - 1)) - 1e-9));
}

StartupResult startup(const SchemeConfig& config, const PolygonalCurve& initial) {
  config.validate();
  StartupResult out;
  SchemeState& s = out.state;
  s.history.emplace_front(initial, fem::initial_curvature(initial), 0.0, 0.0);
  s.tau = config.tau;
  s.A0 = s.newest().A;
  s.L0 = s.newest().L;
  s.mode = initial_mode(config.kind);

  const std::size_t depth = required_depth(config);
  if (depth <= 1) return out;

  if (depth == 2) {
    // one Euler step of the matching formulation
    StepOutcome first = advance_state(s, config, Discretization::Euler, 1, s.mode);
    out.reports.push_back(first.report);
    s = std::move(first.state);
    return out;
  }

  // AP-BDFk, k >= 3: levels 1..k-1 from a substepped AP-BDF(k-1) run.
  const int k = config.bdf_order;
  const std::size_t sub = startup_substeps(config.tau, k);
  SchemeConfig inner = config;
  inner.bdf_order = k - 1;
  inner.tau = config.tau / static_cast<double>(sub);
  inner.T = config.tau * static_cast<double>(k - 1);
  StartupResult inner_start = startup(inner, initial);
  SchemeState fine = std::move(inner_start.state);
  fine.A0 = s.A0;
  StepReport last{};
  if (!inner_start.reports.empty()) last = inner_start.reports.back();
  std::size_t fine_iters = 0;
  for (const auto& r : inner_start.reports) fine_iters = std::max(fine_iters, r.newton_iterations);

  std::size_t level = 1;
  auto take = [&](const SchemeState& f) {
    while (level * sub <= f.step && level < depth) {
      if (level * sub == f.step) {
        const HistoryEntry& e = f.newest();
        StepReport r = last;
        r.newton_iterations = fine_iters;
        r.deltaL = (e.L - s.newest().L) / config.tau;
        r.lambda = 0.0;
        r.eta = e.eta;
        r.mode = Mode::AreaPreserving;
        out.reports.push_back(r);
        s.history.push_front(e);
        s.step = level;
        fine_iters = 0;
      }
      ++level;
    }
  };
  take(fine);
  while (level < depth) {
    StepOutcome o = step(fine, inner);
    fine_iters = std::max(fine_iters, o.report.newton_iterations);
    last = o.report;
    fine = std::move(o.state);
    take(fine);
  }
  return out;
}

RunResult run_modified(const SchemeConfig& config, const PolygonalCurve& initial,
                       const std::vector<double>& snapshot_times) {
  config.validate();
  const std::size_t steps = config.steps();
  const double gamma = config.threshold();

  std::vector<std::size_t> snap_steps;
  for (double t : snapshot_times) {
    const auto m = static_cast<std::size_t>(std::clamp<long long>(std::llround(t / config.tau), 0,
                                                                   static_cast<long long>(steps)));
    snap_steps.push_back(m);
  }

  StartupResult su;
  std::optional<std::string> startup_failure;
  try {
    su = startup(config, initial);
  } catch (const std::exception& e) {
    startup_failure = std::string("startup: ") + e.what();
    su.state.history.emplace_front(initial, fem::initial_curvature(initial), 0.0, 0.0);
    su.state.tau = config.tau;
    su.state.A0 = su.state.newest().A;
    su.state.L0 = su.state.newest().L;
    su.state.mode = initial_mode(config.kind);
    su.reports.clear();
  }
  RunResult result{.series = {}, .snapshots = {}, .switch_time = {}, .forced_switch = false,
                   .failure = startup_failure, .final_state = su.state};
  SchemeState& state = result.final_state;

  auto record = [&](const HistoryEntry& e, std::size_t m, const StepReport* rep) {
    metrics::DiagnosticsRow row;
    row.t = static_cast<double>(m) * config.tau;
    row.L_norm = e.L / state.L0;
    row.dA = (e.A - state.A0) / state.A0;
    row.lambda = e.lambda;
    row.eta = e.eta;
    row.psi = mesh_ratio(e.curve);
    row.newton_iters = rep ? rep->newton_iterations : 0;
    row.deltaL = rep ? rep->deltaL : 0.0;
    row.mode = fem::mode_name(rep ? rep->mode : state.mode);
    for (std::size_t s : snap_steps) {
      if (s == m) result.snapshots.push_back({row.t, m, e.curve, e.kappa});
    }
    result.series.rows.push_back(std::move(row));
  };

  auto maybe_switch = [&](const StepReport& rep) {
    if (state.mode != Mode::StructurePreserving || std::abs(rep.deltaL) > gamma) return;
    state.mode = Mode::AreaPreserving;
    state.history.front().lambda = 0.0;
    result.series.rows.back().lambda = 0.0;
    result.switch_time = state.time();
  };

  // startup levels, oldest first
  const std::size_t levels = state.history.size();
  for (std::size_t i = levels; i-- > 0;) {
    const std::size_t m = levels - 1 - i;
    record(state.history[i], m, m == 0 ? nullptr : &su.reports[m - 1]);
  }
  if (!su.reports.empty()) maybe_switch(su.reports.back());

  while (!result.failure && state.step < steps) {
    StepOutcome out{state, {}};
    try {
      try {
        out = step(state, config);
      } catch (const std::exception& e) {
        // Both multipliers numerically undetermined (near-collinear lambda*kappa
        // and eta): the two-multiplier system is no longer usable, switch now.
        const bool degenerate = dynamic_cast<const linalg::SchurDegeneracyError*>(&e) != nullptr ||
                                dynamic_cast<const NewtonDivergedError*>(&e) != nullptr;
        if (!degenerate || state.mode != Mode::StructurePreserving) throw;
        state.mode = Mode::AreaPreserving;
        state.history.front().lambda = 0.0;
        result.switch_time = state.time();
        result.forced_switch = true;
        out = step(state, config);
      }
    } catch (const std::exception& e) {
      result.failure = "step " + std::to_string(state.step + 1) + ": " + e.what();
      break;
    }
    state = std::move(out.state);
    record(state.newest(), state.step, &out.report);
    maybe_switch(out.report);
  }
  return result;
}

}  // namespace curveflow::schemes
