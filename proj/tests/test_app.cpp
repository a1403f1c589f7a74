#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "curveflow/app.hpp"

using namespace curveflow;
using namespace curveflow::app;
namespace fs = std::filesystem;

namespace {

KeyValueFile kv(const std::string& text) {
  std::istringstream in(text);
  return KeyValueFile::parse(in);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("curveflow_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("numbers and fractions") {
  CHECK(parse_number("0.25") == 0.25);
  CHECK(parse_number(" 1/640 ") == 1.0 / 640);
  CHECK(parse_number("3 / 4") == 0.75);
  CHECK(parse_number("1e-3") == 1e-3);
  CHECK_THROWS_AS(parse_number("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_number("abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_number("2x"), std::invalid_argument);
}

TEST_CASE("simulate config") {
  const auto c = simulate_config(kv("# ellipse run\n"
                                    "scheme = sp-bdf2\n"
                                    "tau = 1/640   # step\n"
                                    "T = 0.8\n"
                                    "N = 160\n"
                                    "curve = ellipse\ncurve_a = 2\ncurve_b = 1\n"
                                    "snapshots = 0, 0.4, 0.8\n"
                                    "output = somewhere\n"));
  CHECK(c.scheme.kind == schemes::SchemeKind::SpBdf2);
  CHECK(c.scheme.tau == 1.0 / 640);
  CHECK(c.scheme.steps() == 512);
  CHECK(c.N == 160);
  CHECK(c.snapshot_times == std::vector<double>{0.0, 0.4, 0.8});
  CHECK(c.output == fs::path("somewhere"));
  CHECK_FALSE(c.scheme.gamma);
}

TEST_CASE("config errors name the field and line") {
  try {
    simulate_config(kv("scheme = sp-euler\ntau = 0.01\nT = zero\n"));
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "T");
    CHECK(e.line() == 3);
  }
  try {
    simulate_config(kv("scheme = sp-euler\ntau = 0.01\nT = 0.1\ntua = 3\n"));
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "tua");
  }
  CHECK_THROWS_AS(simulate_config(kv("scheme = sp-euler\ntau = 0.03\nT = 0.1\n")), ConfigError);
  CHECK_THROWS_AS(simulate_config(kv("scheme = sp-euler\ntau = 0.01\nT = 0.1\nN = 2.5\n")), ConfigError);
  CHECK_THROWS_AS(simulate_config(kv("scheme = sp-euler\ntau = 0.01\nT = 0.1\ncurve = blob\n")), ConfigError);
  CHECK_THROWS_AS(kv("no equals sign here\n"), ConfigError);
  CHECK_THROWS_AS(simulate_config(kv("tau = 0.01\nT = 0.1\n")), ConfigError);
}

TEST_CASE("converge config and refinement path") {
  const auto c = converge_config(kv("scheme = ap-bdf\nbdf_order = 3\nT = 0.25\npath = two_thirds\n"
                                    "taus = 1/500, 1/1000\n"));
  CHECK(c.path == PathRule::TwoThirds);
  CHECK(c.path_c == 0.05);
  CHECK(c.scheme.bdf_order == 3);
  CHECK(c.nodes_for(1.0 / 500) == 125);
  const auto lin = converge_config(kv("scheme = pd-bdf2\nT = 0.25\ntaus = 1/200, 1/400\n"));
  CHECK(lin.nodes_for(1.0 / 200) == 10);
  CHECK(lin.nodes_for(1.0 / 1600) == 80);
  const auto sq = converge_config(kv("scheme = sp-euler\nT = 0.25\npath = square\ntaus = 1/400, 1/1600\n"));
  CHECK(sq.nodes_for(1.0 / 1600) == 40);
  CHECK_THROWS_AS(converge_config(kv("scheme = sp-euler\nT = 0.25\ntaus = 1/400\n")), ConfigError);
}

TEST_CASE("snapshot round trip is bitwise") {
  const auto e = generate_ellipse(2, 1, 37).rotated(0.3);
  const auto k = fem::initial_curvature(e);
  std::stringstream ss;
  write_snapshot(ss, 0.123456789, e, k);
  const auto back = read_snapshot(ss);
  CHECK(back.t == 0.123456789);
  REQUIRE(back.curve.size() == 37);
  for (std::size_t i = 0; i < 37; ++i) CHECK(back.curve[i] == e[i]);
  CHECK(back.kappa == k);
}

TEST_CASE("snapshot reader accepts two columns and clockwise input") {
  std::istringstream in("t=0 N=4\n0 0\n0 1\n1 1\n1 0\n");
  const auto s = read_snapshot(in);
  CHECK(signed_area(s.curve) == doctest::Approx(1.0));
  CHECK(s.curve[1] == Vec2{1, 0});
  std::istringstream bad("t=0 N=5\n0 0\n0 1\n1 1\n1 0\n");
  CHECK_THROWS(read_snapshot(bad));
}

TEST_CASE("distance through snapshot files matches the in-process value") {
  const auto dir = scratch("distance");
  fs::create_directories(dir);
  const auto a = generate_ellipse(2, 1, 50);
  const auto b = generate_mikula(70);
  for (const auto& [name, c] : {std::pair{"a.txt", a}, std::pair{"b.txt", b}}) {
    std::ofstream f(dir / name);
    write_snapshot(f, 0.0, c, fem::initial_curvature(c));
  }
  const double direct = metrics::manifold_distance(a, b);
  const double via_files = metrics::manifold_distance(read_snapshot(dir / "a.txt").curve,
                                                      read_snapshot(dir / "b.txt").curve);
  CHECK(direct == via_files);
  fs::remove_all(dir);
}

TEST_CASE("simulate writes diagnostics, snapshots and a manifest") {
  auto c = simulate_config(kv("scheme = sp-bdf2\ntau = 1/100\nT = 0.1\nN = 32\nsnapshots = 0, 0.05\n"));
  c.output = scratch("simulate");
  const auto out = simulate(c);
  CHECK_FALSE(out.run.failure);
  const std::string csv = slurp(c.output / "diagnostics.csv");
  CHECK(csv.rfind("t,L_norm,dA,lambda,eta,psi,newton_iters,deltaL,mode\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
  CHECK(fs::exists(c.output / "snapshot_t0.05.txt"));
  const auto manifest = nlohmann::json::parse(slurp(c.output / "manifest.json"));
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["failure"].is_null());
  CHECK(manifest["config"]["N"] == 32);
  fs::remove_all(c.output);
}

TEST_CASE("converge on identical levels has zero error and no order") {
  auto c = converge_config(kv("scheme = sp-bdf2\nT = 0.05\ntaus = 1/100, 1/100, 1/100\npath_c = 0.25\n"));
  c.output = scratch("converge");
  const auto out = converge(c);
  CHECK_FALSE(out.failed);
  REQUIRE(out.rows.size() == 2);
  CHECK(out.rows[0].error == 0.0);
  CHECK(out.rows[1].error == 0.0);
  CHECK_FALSE(out.rows[1].order);
  const std::string csv = slurp(c.output / "convergence.csv");
  CHECK(csv.rfind("tau,h,error,order\n", 0) == 0);
  CHECK(slurp(c.output / "multipliers.csv").rfind("tau,h,N,lambda,eta\n", 0) == 0);
  fs::remove_all(c.output);
}

TEST_CASE("worker count") {
  CHECK(worker_count(1) == 1);
  CHECK(worker_count(4) >= 1);
  CHECK(worker_count(4) <= 4);
}
