// End-to-end acceptance checks. Prints one [PASS]/[FAIL] line per criterion
// plus indented detail lines, and exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "curveflow/app.hpp"
#include "curveflow/femcore.hpp"
#include "curveflow/linalg.hpp"
#include "curveflow/metrics.hpp"
#include "curveflow/schemes.hpp"
#include "oracles.hpp"

using namespace curveflow;
using schemes::SchemeKind;

namespace {

int failures = 0;

void detail(const std::string& s) { std::printf("    %s\n", s.c_str()); }

void verdict(int id, bool ok, const std::string& what, double seconds) {
  std::printf("[%s] AC%d %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string list(const std::vector<double>& v, const char* f = "%.3f") {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ", ") + fmt(f, x);
  return "[" + s + "]";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

schemes::SchemeConfig scheme(SchemeKind kind, double tau, double T, int order = 2) {
  schemes::SchemeConfig c;
  c.kind = kind;
  c.tau = tau;
  c.T = T;
  c.bdf_order = order;
  return c;
}

const PolygonalCurve& ellipse160() {
  static const PolygonalCurve e = generate_ellipse(2, 1, 160);
  return e;
}

// Ellipse runs at N=160, tau=1/640, T=0.8 shared by criteria 1, 2 and 7.
struct LongRun {
  const char* name;
  schemes::RunResult result;
};

std::vector<LongRun>& long_runs() {
  static std::vector<LongRun> runs = [] {
    std::vector<LongRun> out;
    const double tau = 1.0 / 640;
    out.push_back({"SP-Euler", schemes::run_modified(scheme(SchemeKind::SpEuler, tau, 0.8), ellipse160())});
    out.push_back({"SP-CN", schemes::run_modified(scheme(SchemeKind::SpCrankNicolson, tau, 0.8), ellipse160())});
    out.push_back({"SP-BDF2", schemes::run_modified(scheme(SchemeKind::SpBdf2, tau, 0.8), ellipse160())});
    out.push_back({"AP-BDF2", schemes::run_modified(scheme(SchemeKind::ApBdf, tau, 0.8, 2), ellipse160())});
    out.push_back({"PD-BDF2", schemes::run_modified(scheme(SchemeKind::PdBdf2, tau, 0.8), ellipse160())});
    return out;
  }();
  return runs;
}

app::ConvergeOutcome study(SchemeKind kind, int order, app::PathRule path, double c, std::vector<double> taus,
                           const std::string& tag) {
  app::ConvergeConfig cfg;
  cfg.scheme = scheme(kind, taus.front(), 0.25, order);
  cfg.path = path;
  cfg.path_c = c;
  cfg.taus = std::move(taus);
  cfg.output = std::filesystem::temp_directory_path() / ("curveflow_acceptance_" + tag);
  auto out = app::converge(cfg);
  std::filesystem::remove_all(cfg.output);
  return out;
}

std::vector<double> errors(const app::ConvergeOutcome& o) {
  std::vector<double> e;
  for (const auto& r : o.rows) e.push_back(r.error);
  return e;
}

std::vector<double> orders(const app::ConvergeOutcome& o) {
  std::vector<double> p;
  for (const auto& r : o.rows) {
    if (r.order) p.push_back(*r.order);
  }
  return p;
}

bool all_in(const std::vector<double>& v, double lo, double hi) {
  return !v.empty() && std::all_of(v.begin(), v.end(), [&](double x) { return x >= lo && x <= hi; });
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (const auto& run : long_runs()) {
    if (std::string(run.name) == "PD-BDF2") continue;
    double worst = 0.0;
    for (const auto& r : run.result.series.rows) worst = std::max(worst, std::abs(r.dA));
    const bool pass = !run.result.failure && worst <= 1e-9;
    ok = ok && pass;
    detail(std::string(run.name) + ": max |A^m - A^0|/A^0 = " + fmt("%.2e", worst) +
           (run.result.failure ? " failure: " + *run.result.failure : ""));
  }
  verdict(1, ok, "area preservation, ellipse N=160 tau=1/640 T=0.8, bound 1e-9", seconds_since(t0));
}

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const double L0 = perimeter(ellipse160());
  bool ok = true;
  for (const auto& run : long_runs()) {
    const auto& rows = run.result.series.rows;
    double worst_rise = -1e300;
    bool strict = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double rise = (rows[i].L_norm - rows[i - 1].L_norm) * L0;
      worst_rise = std::max(worst_rise, rise);
      if (rows[i].t <= 0.4 + 1e-12 && !(rise < 0.0)) strict = false;
    }
    const bool pass = !run.result.failure && worst_rise <= 1e-8 && strict;
    ok = ok && pass;
    detail(std::string(run.name) + ": max L^{m+1}-L^m = " + fmt("%.2e", worst_rise) +
           ", strictly decreasing on [0,0.4]: " + (strict ? "yes" : "no"));
  }
  verdict(2, ok, "perimeter monotonicity, tolerance 1e-8", seconds_since(t0));
}

app::ConvergeOutcome& sp_bdf2_study() {
  static app::ConvergeOutcome o = study(SchemeKind::SpBdf2, 2, app::PathRule::Linear, 0.05,
                                        {1.0 / 200, 1.0 / 400, 1.0 / 800, 1.0 / 1600}, "sp_bdf2");
  return o;
}

void criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto o = study(SchemeKind::PdBdf2, 2, app::PathRule::Linear, 0.05, {1.0 / 200, 1.0 / 400, 1.0 / 800, 1.0 / 1600},
                       "pd_bdf2");
  const auto e = errors(o);
  const auto p = orders(o);
  const bool orders_ok = !o.failed && p.size() == 2 && all_in(p, 1.85, 2.15);
  const bool magnitude_ok = !e.empty() && e[0] >= 2.28e-2 / 2 && e[0] <= 2.28e-2 * 2;
  detail("errors " + list(e, "%.3e") + ", orders " + list(p));
  detail(std::string("orders in [1.85, 2.15]: ") + (orders_ok ? "yes" : "no") +
         "; first error within a factor 2 of 2.28e-2: " + (magnitude_ok ? "yes" : "no"));
  verdict(3, orders_ok && magnitude_ok, "PD-BDF2 convergence, tau = 0.05 h", seconds_since(t0));
}

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto o2 = study(SchemeKind::ApBdf, 2, app::PathRule::Linear, 0.05, {1.0 / 200, 1.0 / 400, 1.0 / 800, 1.0 / 1600},
                        "ap_bdf2");
  const auto o3 = study(SchemeKind::ApBdf, 3, app::PathRule::TwoThirds, 0.05, {1.0 / 500, 1.0 / 720, 1.0 / 1280},
                        "ap_bdf3");
  const auto p2 = orders(o2), p3 = orders(o3);
  const bool ok2 = !o2.failed && p2.size() == 2 && all_in(p2, 1.85, 2.15);
  const bool ok3 = !o3.failed && p3.size() == 1 && all_in(p3, 2.9, 3.4);
  detail("AP-BDF2 errors " + list(errors(o2), "%.3e") + ", orders " + list(p2));
  detail("AP-BDF3 errors " + list(errors(o3), "%.3e") + ", orders " + list(p3));
  // informational: the same path on a geometric step sequence
  const auto g3 = study(SchemeKind::ApBdf, 3, app::PathRule::TwoThirds, 0.05, {1.0 / 500, 1.0 / 1000, 1.0 / 2000},
                        "ap_bdf3_geometric");
  detail("info: AP-BDF3 on tau = 1/500, 1/1000, 1/2000: errors " + list(errors(g3), "%.3e") + ", order " +
         list(orders(g3)));
  verdict(4, ok2 && ok3, "AP-BDF2 orders in [1.85, 2.15], AP-BDF3 orders in [2.9, 3.4]", seconds_since(t0));
}

void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto v = study(SchemeKind::SpBdf2Variant, 2, app::PathRule::Linear, 0.05,
                       {1.0 / 200, 1.0 / 400, 1.0 / 800, 1.0 / 1600}, "variant");
  const auto& s = sp_bdf2_study();
  const auto pv = orders(v), ps = orders(s);
  const bool variant_ok = !v.failed && pv.size() == 2 && all_in(pv, -1e300, 1.5);
  const bool sp_ok = !s.failed && ps.size() == 2 && all_in(ps, 1.85, 1e300);
  detail("SP-BDF2-variant errors " + list(errors(v), "%.3e") + ", orders " + list(pv));
  detail("SP-BDF2         errors " + list(errors(s), "%.3e") + ", orders " + list(ps));
  std::vector<double> lam;
  for (const auto& lv : v.levels) lam.push_back(std::abs(lv.lambda));
  detail("info: variant |lambda(T)| per level " + list(lam, "%.2e"));
  verdict(5, variant_ok && sp_ok, "variant orders <= 1.5 while SP-BDF2 orders >= 1.85", seconds_since(t0));
}

void criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto o = study(SchemeKind::SpEuler, 1, app::PathRule::Square, 1.0, {1.0 / 400, 1.0 / 1600, 1.0 / 6400},
                       "sp_euler");
  const auto p = orders(o);
  detail("errors " + list(errors(o), "%.3e") + ", order " + list(p));
  verdict(6, !o.failed && !p.empty() && all_in(p, 0.8, 1.2), "SP-Euler order on tau = h^2 in [0.8, 1.2]",
          seconds_since(t0));
}

void criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& run = long_runs()[2].result;
  bool ok = !run.failure && run.switch_time.has_value();
  if (ok) {
    const double ts = *run.switch_time;
    const auto& rows = run.series.rows;
    std::size_t k = 0;
    while (k < rows.size() && rows[k].t < ts - 1e-12) ++k;
    // rows[k] is the level at which the switch fired
    std::vector<double> before, after;
    for (std::size_t i = (k >= 4 ? k - 4 : 1); i <= k && i < rows.size(); ++i) before.push_back(rows[i].newton_iters);
    for (std::size_t i = k + 1; i < rows.size(); ++i) after.push_back(rows[i].newton_iters);
    const auto mean = [](const std::vector<double>& v) {
      return v.empty() ? NAN : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    const double psi_switch = rows[k].psi, psi_end = rows.back().psi;
    ok = ts >= 0.4 && ts <= 0.8 && before.size() == 5 && !after.empty() && mean(after) < mean(before) &&
         psi_end <= psi_switch;
    detail("t* = " + fmt("%.6f", ts) + (run.forced_switch ? " (forced)" : "") + ", Newton iterations before " +
           list(before, "%.0f") + " mean " + fmt("%.2f", mean(before)) + ", after mean " + fmt("%.2f", mean(after)));
    detail("Psi(t*) = " + fmt("%.5f", psi_switch) + ", Psi(T) = " + fmt("%.5f", psi_end));
  } else {
    detail(run.failure ? "failure: " + *run.failure : std::string("no switch"));
  }
  verdict(7, ok, "modification switch in [0.4, 0.8], cheaper Newton, Psi non-increasing", seconds_since(t0));
}

void criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& s = sp_bdf2_study();
  std::vector<double> lam, eta;
  for (const auto& lv : s.levels) {
    lam.push_back(std::abs(lv.lambda));
    eta.push_back(std::abs(lv.eta));
  }
  bool ok = false;
  for (std::size_t j = 0; j + 1 < lam.size(); ++j) {
    const double rl = lam[j] / lam[j + 1], re = eta[j] / eta[j + 1];
    detail("tau 1/" + fmt("%.0f", 1.0 / s.levels[j].tau) + " -> 1/" + fmt("%.0f", 1.0 / s.levels[j + 1].tau) +
           ": |lambda| ratio " + fmt("%.2f", rl) + ", |eta| ratio " + fmt("%.2f", re));
    if (rl >= 3.0 && re >= 3.0) ok = true;
  }
  detail("|lambda(T)| " + list(lam, "%.2e") + ", |eta(T)| " + list(eta, "%.2e"));
  verdict(8, ok && !s.failed, "multipliers shrink by >= 3 between adjacent levels", seconds_since(t0));
}

Eigen::VectorXd randn(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

void criterion9() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(9);

  bool variations = true;
  for (int t = 0; t < 50; ++t) {
    const PolygonalCurve c(oracle::random_star(rng, 16, {0, 0}, 0.5, 1.5));
    const Eigen::VectorXd x = c.coordinates(), v = randn(rng, 32);
    const double eps = 1e-6;
    const double fl = (perimeter(Eigen::VectorXd(x + eps * v)) - perimeter(Eigen::VectorXd(x - eps * v))) / (2 * eps);
    const double fa = (signed_area(Eigen::VectorXd(x + eps * v)) - signed_area(Eigen::VectorXd(x - eps * v))) / (2 * eps);
    variations = variations && std::abs(fem::variation_perimeter(c, v) - fl) <= 1e-6 * std::abs(fl) + 1e-8 &&
                 std::abs(fem::variation_area(c, v) - fa) <= 1e-6 * std::abs(fa) + 1e-8;
  }
  detail(std::string("variations vs finite differences (1e-6 relative): ") + (variations ? "ok" : "MISMATCH"));

  bool bdf = true;
  for (int k = 1; k <= 6; ++k) {
    const auto d = schemes::bdf_coefficients(k);
    double first = 0.0;
    for (int l = 0; l <= k; ++l) first += l * d[static_cast<std::size_t>(l)];
    bdf = bdf && std::accumulate(d.begin(), d.end(), 0.0) == 0.0 && std::abs(first + 1.0) < 1e-14;
  }
  detail(std::string("BDF coefficient identities: ") + (bdf ? "ok" : "BROKEN"));

  bool cs = true;
  for (int t = 0; t < 1000; ++t) {
    const PolygonalCurve c(oracle::random_star(rng, 3 + t % 30, {0, 0}, 0.5, 1.5));
    const auto n = static_cast<Eigen::Index>(c.size());
    const Eigen::VectorXd u = randn(rng, n), w = randn(rng, n);
    const double uw = fem::lumped_inner(u, w, c);
    cs = cs && uw * uw <= fem::lumped_inner(u, u, c) * fem::lumped_inner(w, w, c) * (1 + 1e-12);
  }
  detail(std::string("lumped Cauchy-Schwarz on 1000 random fields: ") + (cs ? "ok" : "VIOLATED"));

  int mc_ok = 0;
  std::uniform_real_distribution<double> off(-0.6, 0.6);
  for (int p = 0; p < 20; ++p) {
    const auto a = oracle::random_star(rng, 10 + p, {0, 0}, 0.4, 1.2);
    const auto b = oracle::random_star(rng, 8 + p, {off(rng), off(rng)}, 0.4, 1.2);
    const double exact = metrics::polygon_intersection_area(PolygonalCurve(a), PolygonalCurve(b));
    const auto mc = oracle::intersection_area_mc(a, b, 400000, rng);
    if (std::abs(exact - mc.estimate) <= 3 * std::max(mc.std_error, 1e-12)) ++mc_ok;
  }
  detail("intersection vs Monte Carlo within 3 sigma: " + std::to_string(mc_ok) + "/20");

  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 24, k = 1 + t % 2;
    linalg::BorderedSystem s;
    Eigen::MatrixXd core = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return std::normal_distribution<double>()(rng); });
    core += 3.0 * Eigen::MatrixXd::Identity(n, n);
    s.core = core.sparseView();
    s.border_cols = Eigen::MatrixXd::NullaryExpr(n, k, [&] { return std::normal_distribution<double>()(rng); });
    s.border_rows = Eigen::MatrixXd::NullaryExpr(k, n, [&] { return std::normal_distribution<double>()(rng); });
    s.rhs = randn(rng, n + k);
    const Eigen::VectorXd z = linalg::solve_bordered(s);
    const auto ref = oracle::gauss_solve(oracle::to_rows(s.to_dense()),
                                         std::vector<double>(s.rhs.data(), s.rhs.data() + s.rhs.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double r = ref[static_cast<std::size_t>(i)];
      worst = std::max(worst, std::abs(z[i] - r) / std::max(1.0, std::abs(r)));
    }
  }
  detail("bordered solver vs dense oracle, 100 systems with N=8: max deviation " + fmt("%.2e", worst));

  verdict(9, variations && bdf && cs && mc_ok == 20 && worst <= 1e-9, "geometry/FEM property suite",
          seconds_since(t0));
}

void criterion10() {
  const auto t0 = std::chrono::steady_clock::now();
  auto spread = [](const fem::NodalField& k) { return (k.maxCoeff() - k.minCoeff()) / k.mean(); };
  const double tau = 1.0 / 6400;
  const auto mik = schemes::run_modified(scheme(SchemeKind::SpBdf2, tau, 0.15), generate_mikula(160));
  const auto rect = schemes::run_modified(scheme(SchemeKind::SpBdf2, tau, 0.5), generate_rectangle(4, 1, 160));
  bool ok = true;
  for (const auto& [name, run] : {std::pair{"Mikula (T=0.15)", &mik}, std::pair{"rectangle 4x1 (T=0.5)", &rect}}) {
    const double s = spread(run->final_state.newest().kappa);
    ok = ok && !run->failure && s <= 0.05;
    detail(std::string(name) + ": curvature spread " + fmt("%.4f", s) +
           (run->switch_time ? ", switch at t = " + fmt("%.4f", *run->switch_time) : "") +
           (run->failure ? ", failure: " + *run->failure : ""));
  }
  verdict(10, ok, "benchmark curvature spread <= 0.05", seconds_since(t0));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9, criterion10};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      std::printf("[FAIL] criterion raised: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
