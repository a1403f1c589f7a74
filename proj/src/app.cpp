#include "curveflow/app.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace curveflow::app {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_time(double t) {
  std::ostringstream os;
  os << std::setprecision(6) << t;
  return os.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

nlohmann::json scheme_json(const schemes::SchemeConfig& s) {
  nlohmann::json j;
  j["scheme"] = std::string(schemes::scheme_name(s.kind));
  j["tau"] = s.tau;
  j["T"] = s.T;
  j["tol"] = s.tol;
  j["gamma"] = s.threshold();
  j["max_newton"] = s.max_newton;
  j["bdf_order"] = s.bdf_order;
  return j;
}

nlohmann::json curve_json(const CurveSpec& c) {
  nlohmann::json j;
  j["kind"] = c.kind;
  if (c.kind == "ellipse") {
    j["a"] = c.a;
    j["b"] = c.b;
  } else if (c.kind == "rectangle") {
    j["width"] = c.width;
    j["height"] = c.height;
  } else if (c.kind == "file") {
    j["file"] = c.file;
  }
  return j;
}

std::vector<std::string> path_strings(const std::vector<std::filesystem::path>& files) {
  std::vector<std::string> out;
  for (const auto& f : files) out.push_back(f.string());
  return out;
}

schemes::SchemeConfig scheme_config(const KeyValueFile& kv, bool needs_tau) {
  schemes::SchemeConfig s;
  try {
    s.kind = schemes::parse_scheme(kv.text("scheme"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("scheme", 0, e.what());
  }
  s.tau = needs_tau ? kv.number("tau") : 1.0;
  s.T = kv.number("T");
  s.tol = kv.number("tol", s.tol);
  if (kv.has("gamma")) s.gamma = kv.number("gamma");
  s.max_newton = kv.count("max_newton", s.max_newton);
  s.bdf_order = static_cast<int>(kv.count("bdf_order", 2));
  return s;
}

void validate_scheme(const schemes::SchemeConfig& s, const std::string& field) {
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, 0, e.what());
  }
}

CurveSpec curve_spec(const KeyValueFile& kv) {
  CurveSpec c;
  c.kind = kv.text("curve", c.kind);
  c.a = kv.number("curve_a", c.a);
  c.b = kv.number("curve_b", c.b);
  c.width = kv.number("curve_width", c.width);
  c.height = kv.number("curve_height", c.height);
  c.file = kv.text("curve_file", "");
  if (c.kind != "ellipse" && c.kind != "mikula" && c.kind != "rectangle" && c.kind != "file") {
    throw ConfigError("curve", 0, "unknown curve '" + c.kind + "'");
  }
  if (c.kind == "file" && c.file.empty()) throw ConfigError("curve_file", 0, "required for curve = file");
  return c;
}

void reject_unused(const KeyValueFile& kv) {
  const auto extra = kv.unused();
  if (!extra.empty()) throw ConfigError(extra.front(), 0, "unknown key");
}

}  // namespace

ConfigError::ConfigError(const std::string& field, std::size_t line, const std::string& what)
    : std::runtime_error((line ? "line " + std::to_string(line) + ": " : std::string()) + field + ": " + what),
      field_(field),
      line_(line) {}

double parse_number(const std::string& text) {
  const std::string s = trim(text);
  const auto slash = s.find('/');
  auto one = [](const std::string& part) {
    std::size_t used = 0;
    const double v = std::stod(part, &used);
    if (used != part.size()) throw std::invalid_argument("trailing characters in '" + part + "'");
    return v;
  };
  try {
    if (slash == std::string::npos) return one(s);
    const double den = one(trim(s.substr(slash + 1)));
    if (den == 0.0) throw std::invalid_argument("zero denominator");
    return one(trim(s.substr(0, slash))) / den;
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("out of range: '" + s + "'");
  }
}

KeyValueFile KeyValueFile::parse(std::istream& in) {
  KeyValueFile kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line, lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("?", lineno, "empty key");
    kv.entries_[key] = {trim(line.substr(eq + 1)), lineno};
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  return parse(in);
}

const KeyValueFile::Entry& KeyValueFile::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(key, 0, "missing");
  used_[key] = true;
  return it->second;
}

std::string KeyValueFile::text(const std::string& key) const { return at(key).value; }

std::string KeyValueFile::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

double KeyValueFile::number(const std::string& key) const {
  const Entry& e = at(key);
  try {
    return parse_number(e.value);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(key, e.line, ex.what());
  }
}

double KeyValueFile::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::size_t KeyValueFile::count(const std::string& key) const {
  const Entry& e = at(key);
  const double v = number(key);
  if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError(key, e.line, "expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

std::size_t KeyValueFile::count(const std::string& key, std::size_t fallback) const {
  return has(key) ? count(key) : fallback;
}

std::vector<double> KeyValueFile::numbers(const std::string& key) const {
  const Entry& e = at(key);
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    try {
      out.push_back(parse_number(item));
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(key, e.line, ex.what());
    }
  }
  return out;
}

std::vector<std::string> KeyValueFile::unused() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_) {
    if (!used_.count(key)) out.push_back(key);
  }
  return out;
}

PolygonalCurve CurveSpec::build(std::size_t n) const {
  if (kind == "ellipse") return generate_ellipse(a, b, n);
  if (kind == "mikula") return generate_mikula(n);
  if (kind == "rectangle") return generate_rectangle(width, height, n);
  if (kind == "file") return read_snapshot(std::filesystem::path(file)).curve;
  throw std::invalid_argument("unknown curve '" + kind + "'");
}

double ConvergeConfig::h_for(double tau) const {
  switch (path) {
    case PathRule::Linear: return tau / path_c;
    case PathRule::Square: return std::sqrt(tau / path_c);
    case PathRule::TwoThirds: return std::pow(tau / path_c, 1.5);
  }
  return 0.0;
}

std::size_t ConvergeConfig::nodes_for(double tau) const {
  return static_cast<std::size_t>(std::llround(n_scale / h_for(tau)));
}

SimulateConfig simulate_config(const KeyValueFile& kv) {
  SimulateConfig c;
  c.scheme = scheme_config(kv, true);
  c.N = kv.count("N", c.N);
  c.curve = curve_spec(kv);
  if (kv.has("snapshots")) c.snapshot_times = kv.numbers("snapshots");
  c.output = kv.text("output", c.output.string());
  reject_unused(kv);
  validate_scheme(c.scheme, "T");
  if (c.N < 3) throw ConfigError("N", 0, "need at least 3 vertices");
  for (double t : c.snapshot_times) {
    if (t < 0.0 || t > c.scheme.T + 1e-12) throw ConfigError("snapshots", 0, "time outside [0, T]");
  }
  return c;
}

ConvergeConfig converge_config(const KeyValueFile& kv) {
  ConvergeConfig c;
  c.scheme = scheme_config(kv, false);
  c.curve = curve_spec(kv);
  const std::string rule = kv.text("path", "linear");
  if (rule == "linear") {
    c.path = PathRule::Linear;
  } else if (rule == "square") {
    c.path = PathRule::Square;
  } else if (rule == "two_thirds") {
    c.path = PathRule::TwoThirds;
  } else {
    throw ConfigError("path", 0, "expected linear, square or two_thirds");
  }
  c.path_c = kv.number("path_c", c.path == PathRule::Square ? 1.0 : 0.05);
  c.n_scale = kv.number("n_scale", c.n_scale);
  c.taus = kv.numbers("taus");
  c.output = kv.text("output", c.output.string());
  reject_unused(kv);
  if (c.taus.size() < 2) throw ConfigError("taus", 0, "need at least two levels");
  if (!(c.path_c > 0.0) || !(c.n_scale > 0.0)) throw ConfigError("path_c", 0, "must be positive");
  for (double tau : c.taus) {
    schemes::SchemeConfig s = c.scheme;
    s.tau = tau;
    validate_scheme(s, "taus");
    if (c.nodes_for(tau) < 3) throw ConfigError("taus", 0, "level with fewer than 3 vertices");
  }
  return c;
}

void write_snapshot(std::ostream& out, double t, const PolygonalCurve& curve, const fem::NodalField& kappa) {
  if (kappa.size() != static_cast<Eigen::Index>(curve.size())) {
    throw std::invalid_argument("curvature does not match the curve");
  }
  out << std::setprecision(17) << "t=" << t << " N=" << curve.size() << '\n';
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << curve[i].x << ' ' << curve[i].y << ' ' << kappa[static_cast<Eigen::Index>(i)] << '\n';
  }
}

SnapshotData read_snapshot(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("snapshot: empty input");
  double t = 0.0;
  std::size_t n = 0;
  {
    std::istringstream hs(header);
    std::string tt, nn;
    hs >> tt >> nn;
    if (tt.rfind("t=", 0) != 0 || nn.rfind("N=", 0) != 0) throw std::runtime_error("snapshot: bad header");
    t = std::stod(tt.substr(2));
    n = static_cast<std::size_t>(std::stoull(nn.substr(2)));
  }
  std::vector<Vec2> v;
  std::vector<double> k;
  std::string line;
  while (v.size() < n && std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    double x = 0, y = 0, kap = 0;
    if (!(ls >> x >> y)) throw std::runtime_error("snapshot: bad vertex line " + std::to_string(v.size() + 2));
    if (!(ls >> kap)) kap = 0.0;
    v.push_back({x, y});
    k.push_back(kap);
  }
  if (v.size() != n) throw std::runtime_error("snapshot: expected " + std::to_string(n) + " vertices");
  const bool reversed = signed_area(std::span<const Vec2>(v)) < 0.0;
  SnapshotData s{t, PolygonalCurve(std::move(v)), Eigen::Map<Eigen::VectorXd>(k.data(), static_cast<Eigen::Index>(n))};
  if (reversed) std::reverse(s.kappa.begin() + 1, s.kappa.end());
  return s;
}

SnapshotData read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_snapshot(in);
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CURVEFLOW_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) cap = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

SimulateOutcome simulate(const SimulateConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(config.output);
  SimulateOutcome out;
  out.run = schemes::run_modified(config.scheme, config.curve.build(config.N), config.snapshot_times);

  const auto csv = config.output / "diagnostics.csv";
  {
    auto f = open_output(csv);
    out.run.series.write_csv(f);
  }
  out.files.push_back(csv);
  for (const auto& snap : out.run.snapshots) {
    const auto path = config.output / ("snapshot_t" + format_time(snap.t) + ".txt");
    auto f = open_output(path);
    write_snapshot(f, snap.t, snap.curve, snap.kappa);
    out.files.push_back(path);
  }

  nlohmann::json m;
  m["command"] = "simulate";
  m["config"] = scheme_json(config.scheme);
  m["config"]["N"] = config.N;
  m["config"]["curve"] = curve_json(config.curve);
  m["config"]["snapshots"] = config.snapshot_times;
  m["switch_time"] = out.run.switch_time ? nlohmann::json(*out.run.switch_time) : nlohmann::json(nullptr);
  m["forced_switch"] = out.run.forced_switch;
  m["failure"] = out.run.failure ? nlohmann::json(*out.run.failure) : nlohmann::json(nullptr);
  const auto manifest = config.output / "manifest.json";
  out.files.push_back(manifest);
  m["outputs"] = path_strings(out.files);
  m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto f = open_output(manifest);
  f << m.dump(2) << '\n';
  return out;
}

ConvergeOutcome converge(const ConvergeConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(config.output);
  ConvergeOutcome out;
  const std::size_t n_levels = config.taus.size();
  out.levels.resize(n_levels);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < n_levels; j = next++) {
      LevelOutcome& lv = out.levels[j];
      lv.tau = config.taus[j];
      lv.h = config.h_for(lv.tau);
      lv.N = config.nodes_for(lv.tau);
      schemes::SchemeConfig s = config.scheme;
      s.tau = lv.tau;
      try {
        auto run = schemes::run_modified(s, config.curve.build(lv.N));
        if (run.failure) {
          lv.failure = *run.failure;
          continue;
        }
        const auto& last = run.final_state.newest();
        lv.terminal = last.curve;
        lv.lambda = last.lambda;
        lv.eta = last.eta;
      } catch (const std::exception& e) {
        lv.failure = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t workers = worker_count(n_levels);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t j = 0; j < n_levels; ++j) {
    const LevelOutcome& lv = out.levels[j];
    if (lv.failure) {
      out.failed = true;
      continue;
    }
    const auto path = config.output / ("level_" + std::to_string(j) + ".txt");
    auto f = open_output(path);
    write_snapshot(f, config.scheme.T, *lv.terminal, fem::NodalField::Zero(static_cast<Eigen::Index>(lv.N)));
    out.files.push_back(path);
  }

  // Cauchy errors between consecutive completed levels; stop at the first gap.
  for (std::size_t j = 0; j + 1 < n_levels; ++j) {
    const LevelOutcome& a = out.levels[j];
    const LevelOutcome& b = out.levels[j + 1];
    if (a.failure || b.failure) break;
    metrics::ConvergenceRow row{a.tau, a.h, metrics::manifold_distance(*a.terminal, *b.terminal), std::nullopt};
    if (!out.rows.empty()) {
      const auto& prev = out.rows.back();
      if (prev.error > 0.0 && row.error > 0.0 && prev.tau != row.tau) {
        row.order = std::log(prev.error / row.error) / std::log(prev.tau / row.tau);
      }
    }
    out.rows.push_back(row);
  }

  const auto csv = config.output / "convergence.csv";
  {
    auto f = open_output(csv);
    metrics::write_convergence_csv(f, out.rows);
  }
  out.files.push_back(csv);
  const auto mult = config.output / "multipliers.csv";
  {
    auto f = open_output(mult);
    f << "tau,h,N,lambda,eta\n" << std::setprecision(17);
    for (const auto& lv : out.levels) {
      if (!lv.failure) f << lv.tau << ',' << lv.h << ',' << lv.N << ',' << lv.lambda << ',' << lv.eta << '\n';
    }
  }
  out.files.push_back(mult);

  nlohmann::json m;
  m["command"] = "converge";
  m["config"] = scheme_json(config.scheme);
  m["config"].erase("tau");
  m["config"]["curve"] = curve_json(config.curve);
  m["config"]["path"] = config.path == PathRule::Linear ? "linear" : config.path == PathRule::Square ? "square"
                                                                                                        : "two_thirds";
  m["config"]["path_c"] = config.path_c;
  m["config"]["n_scale"] = config.n_scale;
  m["config"]["taus"] = config.taus;
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lv : out.levels) {
    levels.push_back({{"tau", lv.tau},
                      {"h", lv.h},
                      {"N", lv.N},
                      {"failure", lv.failure ? nlohmann::json(*lv.failure) : nlohmann::json(nullptr)}});
  }
  m["levels"] = levels;
  const auto manifest = config.output / "manifest.json";
  out.files.push_back(manifest);
  m["outputs"] = path_strings(out.files);
  m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto f = open_output(manifest);
  f << m.dump(2) << '\n';
  return out;
}

}  // namespace curveflow::app
