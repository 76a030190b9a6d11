#include "densflow/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "densflow/error.hpp"

namespace densflow {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_plain(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Plain numbers, "pi", "<x>*pi" and "pi/<x>".
bool parse_number(const std::string& raw, double& out) {
  const std::string s = trim(raw);
  constexpr double pi = std::numbers::pi;
  if (s == "pi") {
    out = pi;
    return true;
  }
  if (s.size() > 3 && s.compare(s.size() - 3, 3, "*pi") == 0) {
    double f;
    if (!parse_plain(trim(s.substr(0, s.size() - 3)), f)) return false;
    out = f * pi;
    return true;
  }
  if (s.rfind("pi/", 0) == 0) {
    double d;
    if (!parse_plain(trim(s.substr(3)), d) || d == 0.0) return false;
    out = pi / d;
    return true;
  }
  return parse_plain(s, out);
}

struct LineError {
  std::string origin;
  int line;
  std::string key;
  [[noreturn]] void raise(const std::string& what) const {
    throw config_error(origin + ":" + std::to_string(line) + ": " + key + ": " + what);
  }
};

double number(const LineError& at, const std::string& v) {
  double out;
  if (!parse_number(v, out) || !std::isfinite(out)) at.raise("expected a number, got '" + v + "'");
  return out;
}

double positive(const LineError& at, const std::string& v) {
  const double x = number(at, v);
  if (!(x > 0.0)) at.raise("must be positive, got '" + v + "'");
  return x;
}

std::int64_t integer(const LineError& at, const std::string& v, std::int64_t lo) {
  std::int64_t out = 0;
  const auto s = trim(v);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    // Accept integral values written in floating notation, e.g. 5e6.
    double d;
    if (!parse_plain(s, d) || d != std::floor(d) || std::abs(d) > 9e15) {
      at.raise("expected an integer, got '" + v + "'");
    }
    out = static_cast<std::int64_t>(d);
  }
  if (out < lo) at.raise("must be >= " + std::to_string(lo));
  return out;
}

bool boolean(const LineError& at, const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  at.raise("expected true or false, got '" + v + "'");
}

std::string one_of(const LineError& at, const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (v == a) return v;
  }
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  at.raise("expected one of {" + list + "}, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const LineError&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model.kind", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.model_kind = one_of(at, v, {"flat_log", "sphere_log"});
       }},
      {"model.b", [](RunConfig& c, const std::string& v, const LineError& at) { c.b = positive(at, v); }},
      {"model.r_max", [](RunConfig& c, const std::string& v, const LineError& at) { c.r_max = positive(at, v); }},
      {"domain.kind", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.domain_kind = one_of(at, v, {"periodic", "interval"});
       }},
      {"domain.period", [](RunConfig& c, const std::string& v, const LineError& at) { c.period = positive(at, v); }},
      {"domain.a1", [](RunConfig& c, const std::string& v, const LineError& at) { c.a1 = number(at, v); }},
      {"domain.a2", [](RunConfig& c, const std::string& v, const LineError& at) { c.a2 = number(at, v); }},
      {"grid.n", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.n = static_cast<std::size_t>(integer(at, v, static_cast<std::int64_t>(kMinNodes)));
       }},
      {"init.family", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.init_family = one_of(at, v, {"constant", "cosine"});
       }},
      {"init.c", [](RunConfig& c, const std::string& v, const LineError& at) { c.c = positive(at, v); }},
      {"init.a", [](RunConfig& c, const std::string& v, const LineError& at) { c.a = number(at, v); }},
      {"init.k", [](RunConfig& c, const std::string& v, const LineError& at) { c.k = positive(at, v); }},
      {"solver.sigma", [](RunConfig& c, const std::string& v, const LineError& at) { c.solver.sigma = positive(at, v); }},
      {"solver.eps_stop", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.solver.eps_stop = positive(at, v);
       }},
      {"solver.max_steps", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.solver.max_steps = integer(at, v, 1);
       }},
      {"solver.max_slope", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.solver.max_slope = positive(at, v);
       }},
      {"snapshots.every", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.solver.snapshot_every = integer(at, v, 1);
       }},
      {"snapshots.min_ratio", [](RunConfig& c, const std::string& v, const LineError& at) {
         const double x = number(at, v);
         if (x < 0.0 || x >= 1.0) at.raise("must lie in [0, 1)");
         c.solver.snapshot_min_ratio = x;
       }},
      {"analysis.blowup_count", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.blowup.count = static_cast<int>(integer(at, v, 1));
       }},
      {"analysis.stage2_family", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.blowup.stage2_source = static_cast<int>(integer(at, v, 1));
       }},
      {"analysis.tau_tilde", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.blowup.tau_tilde.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) c.blowup.tau_tilde.push_back(number(at, item));
         if (c.blowup.tau_tilde.empty()) at.raise("needs at least one value");
         if (!std::is_sorted(c.blowup.tau_tilde.begin(), c.blowup.tau_tilde.end())) at.raise("must be increasing");
       }},
      {"analysis.monotonicity", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.monotonicity = boolean(at, v);
       }},
      {"analysis.line_tol", [](RunConfig& c, const std::string& v, const LineError& at) { c.line_tol = positive(at, v); }},
      {"analysis.residual_tol", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.residual_tol = positive(at, v);
       }},
      {"monitors.burn_in", [](RunConfig& c, const std::string& v, const LineError& at) {
         const double x = number(at, v);
         if (x < 0.0 || x >= 1.0) at.raise("must lie in [0, 1)");
         c.monitors.burn_in_fraction = x;
       }},
      {"monitors.q_cap", [](RunConfig& c, const std::string& v, const LineError& at) { c.monitors.q_cap = positive(at, v); }},
      {"monitors.k2_over_kpsi_cap", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.monitors.k2_over_kpsi_cap = positive(at, v);
       }},
      {"monitors.k_over_k2_cap", [](RunConfig& c, const std::string& v, const LineError& at) {
         c.monitors.k_over_k2_cap = positive(at, v);
       }},
      {"monitors.ds_cap1", [](RunConfig& c, const std::string& v, const LineError& at) { c.monitors.ds_cap1 = positive(at, v); }},
      {"monitors.ds_cap2", [](RunConfig& c, const std::string& v, const LineError& at) { c.monitors.ds_cap2 = positive(at, v); }},
      {"output.directory", [](RunConfig& c, const std::string& v, const LineError&) { c.output_directory = v; }},
  };
  return table;
}

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::string verdict_word(bool passed, bool skipped) {
  return skipped ? "skipped" : (passed ? "pass" : "fail");
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot write " + path.string());
  f << body;
  if (!f) throw io_error("write failed for " + path.string());
}

std::vector<std::vector<double>> read_csv(const fs::path& path, std::size_t columns) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot read " + path.string());
  std::string line;
  std::getline(f, line);  // header
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != columns) {
      throw io_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                     std::to_string(columns) + " columns");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double manifest_number(const Manifest& m, const std::string& key) {
  const auto* v = m.get(key);
  if (!v) throw io_error("manifest lacks " + key);
  return std::strtod(v->c_str(), nullptr);
}

std::string snapshot_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%06zu.csv", k);
  return buf;
}

void require_run_dir(const fs::path& dir) {
  if (!fs::is_directory(dir) || !fs::exists(dir / "manifest.txt")) {
    throw io_error("run directory " + dir.string() + " does not exist or has no manifest.txt");
  }
}

int status_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Configuration:
    case ErrorKind::Io:
      return 2;
    default:
      return 3;
  }
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return status_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

void record_verdicts(Manifest& m, const std::string& prefix, const std::vector<Verdict>& verdicts) {
  for (const auto& v : verdicts) {
    const std::string key = "verdict." + prefix + v.name;
    m.set(key, verdict_word(v.passed, v.skipped));
    if (!v.passed && !v.skipped) m.set(key + ".first_failure_t", format_double(v.first_failure_t));
    if (!v.detail.empty()) m.set(key + ".detail", sanitize(v.detail));
  }
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error(origin + ":" + std::to_string(lineno) + ": expected 'section.key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const LineError at{origin, lineno, key};
    const auto it = setters().find(key);
    if (it == setters().end()) at.raise("unknown key");
    if (!seen.insert(key).second) at.raise("duplicate key");
    if (value.empty()) at.raise("missing value");
    it->second(cfg, value, at);
    cfg.echo.emplace_back(key, value);
  }

  if (cfg.domain_kind == "interval") {
    if (!seen.count("domain.a1") && !seen.count("domain.a2")) cfg.a2 = std::numbers::pi;
    if (!(cfg.a2 > cfg.a1)) throw config_error(origin + ": domain.a2 must exceed domain.a1");
    if (seen.count("domain.period")) throw config_error(origin + ": domain.period applies to periodic domains only");
  } else {
    if (cfg.period == 0.0) cfg.period = 2.0 * std::numbers::pi;
    if (seen.count("domain.a2")) throw config_error(origin + ": domain.a2 applies to interval domains only");
  }
  if (cfg.init_family == "constant" && seen.count("init.a")) {
    throw config_error(origin + ": init.a applies to the cosine family only");
  }
  if (cfg.blowup.stage2_source > cfg.blowup.count) {
    throw config_error(origin + ": analysis.stage2_family exceeds analysis.blowup_count");
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.string());
}

SurfaceDensityModel make_model(const RunConfig& cfg) {
  double r_max = cfg.r_max;
  if (std::isnan(r_max)) r_max = cfg.model_kind == "sphere_log" ? 1.5 : 1e3;
  return make_builtin(cfg.model_kind, cfg.b, r_max);
}

Domain make_domain(const RunConfig& cfg) {
  return cfg.domain_kind == "interval" ? Domain::interval(cfg.a1, cfg.a2)
                                       : Domain::periodic(cfg.period, cfg.a1);
}

GraphCurve make_initial_curve(const RunConfig& cfg) {
  const auto family = cfg.init_family == "constant" ? InitFamily::Constant : InitFamily::Cosine;
  auto curve = make_initial(make_domain(cfg), cfg.n, family, cfg.c, cfg.a, cfg.k);
  check_curve(curve);
  return curve;
}

fs::path output_directory(const RunConfig& cfg, const fs::path& config_path) {
  if (const char* env = std::getenv("DENSFLOW_OUT"); env && *env) return fs::path(env);
  if (!cfg.output_directory.empty()) return fs::path(cfg.output_directory);
  return fs::path("runs") / config_path.stem();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof buf);
    if (f.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(f.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

const std::string* Manifest::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

Manifest read_manifest(const fs::path& dir) {
  std::ifstream f(dir / "manifest.txt");
  if (!f) throw io_error("cannot read " + (dir / "manifest.txt").string());
  Manifest m;
  std::string line;
  bool files = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line == "[files]") {
      files = true;
      continue;
    }
    if (files) {
      const auto sep = line.find("  ");
      if (sep == std::string::npos) throw io_error("malformed file entry in manifest: " + line);
      m.files.emplace_back(line.substr(sep + 2), line.substr(0, sep));
    } else {
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) throw io_error("malformed manifest line: " + line);
      m.entries.emplace_back(line.substr(0, eq), line.substr(eq + 3));
    }
  }
  return m;
}

void write_manifest(const fs::path& dir, Manifest manifest) {
  manifest.files.clear();
  std::vector<std::string> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "manifest.txt") continue;
    paths.push_back(rel);
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) manifest.files.emplace_back(p, sha256_file(dir / p));

  std::ostringstream os;
  os << "# densflow run manifest\n";
  for (const auto& [k, v] : manifest.entries) os << k << " = " << sanitize(v) << "\n";
  os << "\n[files]\n";
  for (const auto& [p, h] : manifest.files) os << h << "  " << p << "\n";
  write_text(dir / "manifest.txt", os.str());
}

std::vector<std::string> verify_manifest(const fs::path& dir, const Manifest& manifest) {
  std::vector<std::string> bad;
  for (const auto& [p, h] : manifest.files) {
    if (!fs::exists(dir / p) || sha256_file(dir / p) != h) bad.push_back(p);
  }
  return bad;
}

void write_trajectory(const fs::path& dir, const FlowTrajectory& traj, const MonitorReport& report) {
  fs::create_directories(dir / "snapshots");
  std::ostringstream index;
  index << "index,t,step\n";
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const auto& s = traj.snapshots[k];
    std::ostringstream body;
    body << "z,r\n";
    for (std::size_t i = 0; i < s.r.size(); ++i) {
      body << format_double(traj.z[i]) << "," << format_double(s.r[i]) << "\n";
    }
    write_text(dir / "snapshots" / snapshot_name(k), body.str());
    index << k << "," << format_double(s.t) << "," << s.step << "\n";
  }
  write_text(dir / "snapshots" / "index.csv", index.str());

  std::ostringstream series;
  series << "t,r_min,kappa_psi_min,u_max,zero_count,q_max,q_max_times_gap,k2_over_kpsi_max,"
            "abs_k_over_k2_max\n";
  for (const auto& r : report.rows) {
    series << format_double(r.t) << "," << format_double(r.r_min) << ","
           << format_double(r.kappa_psi_min) << "," << format_double(r.u_max) << ","
           << r.zero_count << "," << format_double(r.q_max) << ","
           << format_double(r.q_max_times_gap) << "," << format_double(r.k2_over_kpsi_max) << ","
           << format_double(r.abs_k_over_k2_max) << "\n";
  }
  write_text(dir / "series.csv", series.str());

  std::ostringstream deriv;
  deriv << "t,ds_kpsi_sup_ord1,ds_kpsi_sup_ord2,resolved\n";
  for (const auto& r : report.rows) {
    deriv << format_double(r.t) << "," << format_double(r.ds_kpsi_sup_ord1) << ","
          << format_double(r.ds_kpsi_sup_ord2) << "," << (r.resolved ? 1 : 0) << "\n";
  }
  write_text(dir / "derivative_bounds.csv", deriv.str());

  std::ostringstream steps;
  steps << "t,r_min,dt\n";
  for (const auto& s : traj.series) {
    steps << format_double(s.t) << "," << format_double(s.r_min) << "," << format_double(s.dt) << "\n";
  }
  write_text(dir / "steps.csv", steps.str());
}

FlowTrajectory read_trajectory(const fs::path& dir) {
  require_run_dir(dir);
  const Manifest m = read_manifest(dir);
  FlowTrajectory traj;
  const auto* kind = m.get("run.domain.kind");
  if (!kind) throw io_error("manifest lacks run.domain.kind");
  const double a1 = manifest_number(m, "run.domain.a1");
  const double a2 = manifest_number(m, "run.domain.a2");
  traj.domain = *kind == "interval" ? Domain::interval(a1, a2) : Domain::periodic(a2 - a1, a1);

  const auto* term = m.get("run.termination");
  if (!term) throw io_error("manifest lacks run.termination");
  for (auto t : {Termination::AxisReached, Termination::MaxSteps, Termination::BlowUpOfRhs}) {
    if (*term == to_string(t)) traj.termination = t;
  }
  traj.initial_r_min = manifest_number(m, "run.initial_r_min");
  traj.last_dt = manifest_number(m, "run.last_dt");
  traj.T_est = manifest_number(m, "run.T_est");
  traj.C4_est = manifest_number(m, "run.C4_est");
  traj.C_est = manifest_number(m, "run.C_est");
  traj.estimate.ok = std::isfinite(traj.T_est);
  traj.estimate.T_est = traj.T_est;
  traj.estimate.C4_est = traj.C4_est;

  const auto index = read_csv(dir / "snapshots" / "index.csv", 3);
  for (std::size_t k = 0; k < index.size(); ++k) {
    const auto rows = read_csv(dir / "snapshots" / snapshot_name(k), 2);
    Snapshot s;
    s.t = index[k][1];
    s.step = static_cast<std::int64_t>(index[k][2]);
    if (k == 0) {
      for (const auto& r : rows) traj.z.push_back(r[0]);
    }
    for (const auto& r : rows) s.r.push_back(r[1]);
    if (s.r.size() != traj.z.size()) throw io_error("snapshot " + snapshot_name(k) + " has a different size");
    traj.snapshots.push_back(std::move(s));
  }
  if (traj.snapshots.empty()) throw io_error("run directory has no snapshots");
  for (const auto& r : read_csv(dir / "steps.csv", 3)) traj.series.push_back({r[0], r[1], r[2]});
  return traj;
}

int cmd_validate(const fs::path& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(config);
    const auto model = make_model(cfg);
    const auto rep = validate(model);
    out << "model " << model.kind << "  b = " << format_double(model.b)
        << "  r_max = " << format_double(model.r_max) << "\n";
    for (const auto& c : rep.checks) {
      out << "  " << (c.passed ? "pass" : "FAIL") << "  " << c.name;
      if (!c.detail.empty()) out << "  (" << c.detail << ")";
      out << "\n";
    }
    out << "first zero of phi'+psi' = " << format_double(rep.first_zero_phi_plus_psi) << "\n";
    out << "concavity radius = " << format_double(rep.concavity_radius) << "\n";
    out << "limsup observed = " << format_double(rep.limsup_observed)
        << " (cap " << format_double(model.limsup_cap) << ")\n";
    out << "rho = " << format_double(rep.rho) << "\n";
    out << (rep.passed ? "passed" : "FAILED") << "\n";
    return rep.passed ? 0 : 1;
  });
}

int cmd_run(const fs::path& config, bool overwrite, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = std::chrono::steady_clock::now();
    const auto cfg = load_config(config);
    const auto model = make_model(cfg);
    const auto init = make_initial_curve(cfg);
    const fs::path dir = output_directory(cfg, config);

    if (fs::exists(dir) && !fs::is_empty(dir)) {
      if (!overwrite) {
        throw config_error("run directory " + dir.string() + " is not empty; pass --overwrite to replace it");
      }
      for (const char* name : {"snapshots", "blowup", "series.csv", "steps.csv", "derivative_bounds.csv",
                               "monotonicity.csv", "manifest.txt"}) {
        fs::remove_all(dir / name);
      }
    }

    const auto validation = validate(model);
    const auto traj = run(init, model, cfg.solver);
    const auto report = monitor(traj, model, cfg.monitors);
    fs::create_directories(dir);
    write_trajectory(dir, traj, report);

    Manifest m;
    m.set("tool_version", kToolVersion);
    m.set("config.source", config.string());
    for (const auto& [k, v] : cfg.echo) m.set("config." + k, v);
    m.set("model.kind", model.kind);
    m.set("model.b", format_double(model.b));
    m.set("model.r_max", format_double(model.r_max));
    m.set("validation.passed", validation.passed ? "true" : "false");
    m.set("validation.rho", format_double(validation.rho));
    m.set("run.domain.kind", cfg.domain_kind);
    m.set("run.domain.a1", format_double(traj.domain.a1));
    m.set("run.domain.a2", format_double(traj.domain.a2));
    m.set("run.n", std::to_string(init.size()));
    m.set("run.termination", to_string(traj.termination));
    if (!traj.diagnostic.empty()) m.set("run.diagnostic", traj.diagnostic);
    m.set("run.steps", std::to_string(traj.series.size() - 1));
    m.set("run.snapshots", std::to_string(traj.snapshots.size()));
    m.set("run.initial_r_min", format_double(traj.initial_r_min));
    m.set("run.final_t", format_double(traj.snapshots.back().t));
    m.set("run.last_dt", format_double(traj.last_dt));
    m.set("run.T_est", format_double(traj.T_est));
    m.set("run.C4_est", format_double(traj.C4_est));
    m.set("run.C_est", format_double(traj.C_est));
    m.set("run.estimate.precondition_met", traj.estimate.precondition_met ? "true" : "false");
    m.set("run.estimate.window", std::to_string(traj.estimate.window));
    if (!traj.estimate.message.empty()) m.set("run.estimate.message", traj.estimate.message);
    if (model.b > 0 && std::isfinite(validation.rho) && init.size() > 0) {
      const double r0 = max_radius(init);
      m.set("run.finite_time_bound", format_double(r0 / barrier_speed_bound(model, r0)));
    }
    for (std::size_t i = 0; i < traj.warnings.size(); ++i) m.set("run.warning." + std::to_string(i), traj.warnings[i]);
    for (std::size_t i = 0; i < report.warnings.size(); ++i) {
      m.set("monitor.warning." + std::to_string(i), report.warnings[i]);
    }
    m.set("monitor.burn_in_t", format_double(report.burn_in_t));

    Verdict term;
    term.name = "axis_reached";
    term.passed = traj.termination == Termination::AxisReached;
    if (!term.passed) term.detail = traj.diagnostic;
    std::vector<Verdict> verdicts{term};
    verdicts.insert(verdicts.end(), report.verdicts.begin(), report.verdicts.end());
    record_verdicts(m, "run.", verdicts);
    m.set("wall_clock_seconds",
          format_double(std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()));
    write_manifest(dir, m);

    out << "run directory " << dir.string() << "\n";
    out << "termination " << to_string(traj.termination) << " at t = " << format_double(traj.snapshots.back().t)
        << " after " << traj.series.size() - 1 << " steps\n";
    out << "T_est = " << format_double(traj.T_est) << "  C4_est = " << format_double(traj.C4_est)
        << "  C_est = " << format_double(traj.C_est) << "\n";
    for (const auto& w : traj.warnings) out << "warning: " << w << "\n";
    bool ok = true;
    for (const auto& v : verdicts) {
      out << "  " << verdict_word(v.passed, v.skipped) << "  " << v.name;
      if (!v.passed && !v.skipped) out << "  (" << v.detail << ")";
      out << "\n";
      ok = ok && (v.passed || v.skipped);
    }
    return ok ? 0 : 1;
  });
}

int cmd_blowup(const fs::path& config, const fs::path& run_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(config);
    const auto model = make_model(cfg);
    if (!model.is_flat()) throw config_error("blow-up post-processing needs model.kind = flat_log");
    const auto traj = read_trajectory(run_dir);
    const auto fam = blowup(traj, model, cfg.blowup);

    const fs::path bdir = run_dir / "blowup";
    fs::remove_all(bdir);
    fs::create_directories(bdir);

    std::ostringstream info;
    info << "C = " << format_double(fam.C) << "\n"
         << "T = " << format_double(fam.T) << "\n"
         << "b = " << format_double(fam.b) << "\n"
         << "z_p = " << format_double(fam.center.z_p) << "\n"
         << "degenerate_minimum = " << (fam.center.degenerate ? "true" : "false") << "\n"
         << "stage2_family = " << fam.stage2_source << "\n";
    for (const auto& sl : fam.stage1) {
      info << "lambda_" << sl.j << " = " << format_double(sl.lambda) << "\n"
           << "t_" << sl.j << " = " << format_double(sl.t_j) << "\n";
      std::ostringstream csv;
      csv << "tau,z_tilde,r_tilde\n";
      int missing = 0;
      for (const auto& cell : sl.cells) {
        if (cell.missing) {
          ++missing;
          continue;
        }
        for (std::size_t i = 0; i < cell.curve.size(); ++i) {
          csv << format_double(cell.tau) << "," << format_double(cell.curve.z[i]) << ","
              << format_double(cell.curve.r[i]) << "\n";
        }
      }
      info << "missing_cells_" << sl.j << " = " << missing << "\n";
      write_text(bdir / ("stage1_j" + std::to_string(sl.j) + ".csv"), csv.str());
    }
    std::ostringstream summary;
    summary << "index,tau_tilde,t,sup_deviation,sup_residual\n";
    for (std::size_t i = 0; i < fam.stage2.size(); ++i) {
      const auto& s = fam.stage2[i];
      info << "tau_tilde_" << i << " = " << format_double(s.tau_tilde) << (s.missing ? " (missing)" : "") << "\n";
      summary << i << "," << format_double(s.tau_tilde) << "," << format_double(s.t) << ","
              << format_double(s.sup_deviation) << "," << format_double(s.sup_residual) << "\n";
      if (s.missing) continue;
      std::ostringstream csv;
      csv << "z_tilde,r_tilde,residual\n";
      for (std::size_t k = 0; k < s.curve.size(); ++k) {
        csv << format_double(s.curve.z[k]) << "," << format_double(s.curve.r[k]) << ","
            << format_double(s.residual[k]) << "\n";
      }
      char name[32];
      std::snprintf(name, sizeof name, "stage2_%02zu.csv", i);
      write_text(bdir / name, csv.str());
    }
    write_text(bdir / "family.txt", info.str());
    write_text(bdir / "stage2_summary.csv", summary.str());

    // Gaussian functional of wide stage-2 windows.
    const auto wide = rescale_stage2(traj, model, fam.center.z_p, fam.T,
                                     fam.stage1[static_cast<std::size_t>(fam.stage2_source - 1)].t_j, fam.C,
                                     cfg.blowup.tau_tilde, {8.0, 641});
    const auto gauss = rescaled_monotonicity(wide, model.b);
    std::ostringstream gcsv;
    gcsv << "tau_tilde,value\n";
    for (std::size_t i = 0; i < gauss.value.size(); ++i) {
      gcsv << format_double(gauss.tau_tilde[i]) << "," << format_double(gauss.value[i]) << "\n";
    }
    write_text(bdir / "stage2_gaussian.csv", gcsv.str());

    std::vector<Verdict> verdicts(5);
    verdicts[0].name = "stage2_available";
    verdicts[1].name = "residual_bound";
    verdicts[2].name = "residual_nonincreasing";
    verdicts[3].name = "line_limit";
    verdicts[4].name = "rescaled_gaussian_nonincreasing";
    for (const auto& s : fam.stage2) {
      if (s.missing) {
        verdicts[0].passed = false;
        verdicts[0].detail = s.message;
      }
    }
    std::vector<const Stage2Curve*> present;
    for (const auto& s : fam.stage2) {
      if (!s.missing) present.push_back(&s);
    }
    if (present.empty()) {
      for (std::size_t i = 1; i < verdicts.size(); ++i) verdicts[i].skipped = true;
    } else {
      const auto& last = *present.back();
      if (!(last.sup_residual <= cfg.residual_tol)) {
        verdicts[1].passed = false;
        verdicts[1].first_failure_t = last.t;
        verdicts[1].detail = "sup |residual| = " + format_double(last.sup_residual) + " at tau_tilde = " +
                             format_double(last.tau_tilde);
      }
      const bool integer_b = std::abs(model.b - std::round(model.b)) < 1e-12;
      if (!integer_b) {
        verdicts[3].skipped = true;
        verdicts[3].detail = "non-integer b: limit not identified with the line";
      } else if (!(last.sup_deviation <= cfg.line_tol)) {
        verdicts[3].passed = false;
        verdicts[3].first_failure_t = last.t;
        verdicts[3].detail = "sup |r - sqrt(b)| = " + format_double(last.sup_deviation);
      }
      for (std::size_t i = 1; i < present.size(); ++i) {
        if (present[i]->sup_residual > present[i - 1]->sup_residual && verdicts[2].passed) {
          verdicts[2].passed = false;
          verdicts[2].first_failure_t = present[i]->t;
          verdicts[2].detail = "rises at tau_tilde = " + format_double(present[i]->tau_tilde);
        }
        if (integer_b && present[i]->sup_deviation > present[i - 1]->sup_deviation && verdicts[3].passed) {
          verdicts[3].passed = false;
          verdicts[3].first_failure_t = present[i]->t;
          verdicts[3].detail = "deviation rises at tau_tilde = " + format_double(present[i]->tau_tilde);
        }
      }
      verdicts[4].passed = gauss.nonincreasing;
    }

    Manifest m = read_manifest(run_dir);
    m.set("blowup.C", format_double(fam.C));
    m.set("blowup.z_p", format_double(fam.center.z_p));
    for (std::size_t i = 0; i < fam.stage2.size(); ++i) {
      const auto& s = fam.stage2[i];
      const std::string p = "blowup.stage2." + std::to_string(i) + ".";
      m.set(p + "tau_tilde", format_double(s.tau_tilde));
      m.set(p + "sup_deviation", format_double(s.sup_deviation));
      m.set(p + "sup_residual", format_double(s.sup_residual));
    }
    record_verdicts(m, "blowup.", verdicts);
    write_manifest(run_dir, m);

    out << "blow-up centre z_p = " << format_double(fam.center.z_p) << "  C = " << format_double(fam.C)
        << "  T = " << format_double(fam.T) << "\n";
    for (const auto& s : fam.stage2) {
      out << "  tau_tilde = " << format_double(s.tau_tilde);
      if (s.missing) {
        out << "  missing\n";
        continue;
      }
      out << "  sup|r - sqrt b| = " << format_double(s.sup_deviation)
          << "  sup|residual| = " << format_double(s.sup_residual) << "\n";
    }
    bool ok = true;
    for (const auto& v : verdicts) {
      out << "  " << verdict_word(v.passed, v.skipped) << "  " << v.name;
      if (!v.detail.empty()) out << "  (" << v.detail << ")";
      out << "\n";
      ok = ok && (v.passed || v.skipped);
    }
    return ok ? 0 : 1;
  });
}

int cmd_monotonicity(const fs::path& config, const fs::path& run_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(config);
    const auto model = make_model(cfg);
    if (!cfg.monotonicity) {
      out << "monotonicity disabled by analysis.monotonicity\n";
      return 0;
    }
    if (!model.is_flat()) throw config_error("the Gaussian functional needs model.kind = flat_log");
    const auto traj = read_trajectory(run_dir);
    if (!std::isfinite(traj.T_est)) throw estimation_error("run has no singular time estimate");
    const double z_c = locate_center(traj).z_p;
    std::vector<double> times;
    std::vector<GraphCurve> curves;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
      if (!resolved_time(traj, traj.snapshots[k].t, cfg.monitors.resolution_nodes)) break;
      times.push_back(traj.snapshots[k].t);
      curves.push_back(traj.curve(k));
    }
    const auto s = monotonicity_check(times, curves, traj.T_est, model.b, z_c);

    std::ostringstream csv;
    csv << "t,value,dissipation,dvalue_dt\n";
    for (const auto& r : s.rows) {
      csv << format_double(r.t) << "," << format_double(r.value) << "," << format_double(r.dissipation)
          << "," << format_double(r.dvalue_dt) << "\n";
    }
    write_text(run_dir / "monotonicity.csv", csv.str());

    std::vector<Verdict> verdicts(2);
    verdicts[0].name = "value_nonincreasing";
    verdicts[0].passed = s.verdict.nonincreasing;
    verdicts[1].name = "dissipation_identity";
    verdicts[1].passed = s.verdict.identity;
    verdicts[1].skipped = s.verdict.judged == 0;
    if (!s.verdict.passed) {
      for (auto& v : verdicts) v.detail = s.verdict.detail;
    }
    Manifest m = read_manifest(run_dir);
    m.set("monotonicity.z_c", format_double(z_c));
    m.set("monotonicity.worst_mismatch", format_double(s.verdict.worst_mismatch));
    m.set("monotonicity.worst_increase", format_double(s.verdict.worst_increase));
    m.set("monotonicity.judged_rows", std::to_string(s.verdict.judged));
    record_verdicts(m, "monotonicity.", verdicts);
    write_manifest(run_dir, m);

    out << "Gaussian density: " << s.rows.size() << " samples, value " << format_double(s.rows.front().value)
        << " -> " << format_double(s.rows.back().value) << "\n";
    out << "worst |dvalue/dt + dissipation| / dissipation = " << format_double(s.verdict.worst_mismatch)
        << " over " << s.verdict.judged << " rows\n";
    for (const auto& v : verdicts) out << "  " << verdict_word(v.passed, v.skipped) << "  " << v.name << "\n";
    return s.verdict.passed ? 0 : 1;
  });
}

int cmd_report(const fs::path& run_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_run_dir(run_dir);
    const Manifest m = read_manifest(run_dir);
    const auto bad = verify_manifest(run_dir, m);
    auto show = [&](const char* key) {
      if (const auto* v = m.get(key)) out << key << " = " << *v << "\n";
    };
    for (const char* key : {"model.kind", "model.b", "validation.rho", "run.termination", "run.T_est",
                            "run.C4_est", "run.C_est"}) {
      show(key);
    }
    out << "\nverdict                                              status\n";
    bool ok = true;
    for (const auto& [k, v] : m.entries) {
      if (k.rfind("verdict.", 0) != 0 || k.find(".first_failure_t") != std::string::npos ||
          k.find(".detail") != std::string::npos) {
        continue;
      }
      const std::string name = k.substr(8);
      out << name << std::string(name.size() < 53 ? 53 - name.size() : 1, ' ') << v << "\n";
      if (v == "fail") {
        ok = false;
        if (const auto* d = m.get(k + ".detail")) out << "    " << *d << "\n";
      }
    }
    out << "\nfiles: " << m.files.size() << " listed, " << bad.size() << " digest mismatches\n";
    for (const auto& p : bad) out << "  mismatch: " << p << "\n";
    return ok && bad.empty() ? 0 : 1;
  });
}

}  // namespace densflow
