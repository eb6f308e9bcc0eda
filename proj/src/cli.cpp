#include "twophase/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "twophase/analytic.hpp"
#include "twophase/energy.hpp"
#include "twophase/field_io.hpp"
#include "twophase/kernel.hpp"
#include "twophase/verify.hpp"

namespace twophase::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || trim(v.substr(pos)) != "") {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return x;
}

std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

std::string csv_field(const std::optional<double>& v) {
  return v ? format_number(*v) : "";
}

}  // namespace

// ---------------------------------------------------------------------------
// Key-value files

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& source) {
  KeyValueFile kv;
  kv.source_ = source;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (kv.entries_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    kv.entries_[key] = {trim(line.substr(eq + 1)), line_no, false};
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool KeyValueFile::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueFile::get(const std::string& key) {
  auto& e = entries_.at(key);
  e.used = true;
  return e.value;
}

std::string KeyValueFile::take(const std::string& key, const std::string& fallback) {
  return has(key) ? get(key) : fallback;
}

double KeyValueFile::take_double(const std::string& key, double fallback) {
  return has(key) ? to_double(key, get(key)) : fallback;
}

int KeyValueFile::take_int(const std::string& key, int fallback) {
  if (!has(key)) return fallback;
  const double x = to_double(key, get(key));
  if (x != std::floor(x) || std::abs(x) > 1e9) {
    throw ConfigError(key + ": expected an integer");
  }
  return static_cast<int>(x);
}

bool KeyValueFile::take_bool(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> KeyValueFile::take_list(const std::string& key,
                                            std::vector<double> fallback) {
  if (!has(key)) return fallback;
  std::string v = get(key);
  if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<double> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

void KeyValueFile::reject_unused() const {
  for (const auto& [key, e] : entries_) {
    if (!e.used) {
      throw ConfigError(source_ + ":" + std::to_string(e.line) + ": unknown key '" + key + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Experiment configs

double auto_spacing(double total_mass, int dim, int cells) {
  return 5.0 * ball_radius(total_mass, dim) / cells;
}

int default_cells(int dim) {
  switch (dim) {
    case 1: return 256;
    case 2: return 64;
    default: return 32;
  }
}

namespace {

CoulombConstant parse_coulomb_constant(const std::string& s) {
  if (s == "fundamental") return CoulombConstant::fundamental;
  if (s == "printed") return CoulombConstant::printed;
  throw ConfigError("coulomb constant must be 'fundamental' or 'printed', got '" + s + "'");
}

KernelSpec make_kernel(const std::string& kind, int dim, double rho, double sigma,
                       const fs::path& table, const std::string& constant) {
  switch (parse_kernel_kind(kind)) {
    case KernelKind::coulomb: return KernelSpec::coulomb(dim, parse_coulomb_constant(constant));
    case KernelKind::top_hat: return KernelSpec::top_hat(rho);
    case KernelKind::tent: return KernelSpec::tent(rho);
    case KernelKind::gaussian: return KernelSpec::gaussian(sigma);
    case KernelKind::tabulated:
      if (table.empty()) throw ConfigError("tabulated kernel needs a table path");
      return load_tabulated_kernel(table);
  }
  throw ConfigError("unknown kernel kind " + kind);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

// Enum parsers throw their own exception types; report them as config errors.
template <class F>
auto as_config(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_experiment(KeyValueFile& kv, const fs::path& base_dir) {
  ExperimentConfig cfg;
  SolverConfig& s = cfg.solver;

  const int dim = kv.take_int("grid.dim", 2);
  if (dim < 1 || dim > 3) throw ConfigError("grid.dim must be 1, 2 or 3");
  const int cells = kv.take_int("grid.cells", default_cells(dim));
  if (cells < 4) throw ConfigError("grid.cells must be at least 4");
  s.m1 = kv.take_double("masses.m1", 1.0);
  s.m2 = kv.take_double("masses.m2", 1.0);
  if (!(s.m1 > 0.0) || !(s.m2 > 0.0)) throw ConfigError("masses must be positive");
  const double h = kv.take_double("grid.h", auto_spacing(s.m1 + s.m2, dim, cells));
  if (!(h > 0.0)) throw ConfigError("grid.h must be positive");
  s.grid = Grid::centered(dim, cells, h);

  const std::string kind = kv.take("kernel.kind", "coulomb");
  const double rho = kv.take_double("kernel.rho", 1.0);
  const double sigma = kv.take_double("kernel.sigma", 1.0);
  const fs::path table = resolve(base_dir, kv.take("kernel.table_path", ""));
  const std::string constant = kv.take("kernel.coulomb_constant", "fundamental");
  s.kernel = as_config("kernel", [&] { return make_kernel(kind, dim, rho, sigma, table, constant); });

  s.coefficients.c11 = kv.take_double("coefficients.c11", 0.0);
  s.coefficients.c22 = kv.take_double("coefficients.c22", 0.0);

  s.max_iters = kv.take_int("solver.max_iters", s.max_iters);
  s.energy_tol = kv.take_double("solver.energy_tol", s.energy_tol);
  s.stat_tol = kv.take_double("solver.stat_tol", s.stat_tol);
  const std::string rule = kv.take("solver.step_rule", to_string(s.step_rule));
  s.step_rule = as_config("solver.step_rule", [&] { return parse_step_rule(rule); });
  s.tau = kv.take_double("solver.tau", s.tau);
  s.beta = kv.take_double("solver.beta", s.beta);
  s.armijo = kv.take_double("solver.armijo", s.armijo);
  s.grow_step = kv.take_bool("solver.grow_step", s.grow_step);
  s.recenter_every = kv.take_int("solver.recenter_every", s.recenter_every);
  s.boundary_mass_fraction = kv.take_double("solver.boundary_mass_fraction", s.boundary_mass_fraction);
  s.debug_checks = kv.take_bool("solver.debug_checks", s.debug_checks);
  if (s.max_iters < 1) throw ConfigError("solver.max_iters must be positive");
  if (s.tau < 0.0) throw ConfigError("solver.tau must be non-negative");
  if (!(s.beta > 0.0 && s.beta < 1.0)) throw ConfigError("solver.beta must lie in (0, 1)");
  if (!(s.armijo > 0.0 && s.armijo < 1.0)) throw ConfigError("solver.armijo must lie in (0, 1)");
  if (s.recenter_every < 0) throw ConfigError("solver.recenter_every must be non-negative");

  const std::string init = kv.take("init.kind", to_string(s.init));
  s.init = as_config("init.kind", [&] { return parse_init_kind(init); });
  const int seed = kv.take_int("init.seed", 0);
  if (seed < 0) throw ConfigError("init.seed must be non-negative");
  s.seed = static_cast<std::uint64_t>(seed);
  s.starts = kv.take_int("init.starts", 0);
  if (s.starts < 0) throw ConfigError("init.starts must be non-negative");
  s.init_f1 = resolve(base_dir, kv.take("init.f1", ""));
  s.init_f2 = resolve(base_dir, kv.take("init.f2", ""));
  if (s.init == InitKind::from_files && (s.init_f1.empty() || s.init_f2.empty())) {
    throw ConfigError("init.kind = from_files needs init.f1 and init.f2");
  }

  cfg.output_dir = resolve(base_dir, kv.take("output.dir", "out"));
  cfg.sweep_c11 = kv.take_list("sweep.c11", {});
  cfg.sweep_c22 = kv.take_list("sweep.c22", {});
  cfg.tangent_c = kv.take_list("tangent.c", {});
  kv.reject_unused();
  return cfg;
}

ExperimentConfig load_experiment(const fs::path& path) {
  auto kv = KeyValueFile::load(path);
  return parse_experiment(kv, path.parent_path());
}

// ---------------------------------------------------------------------------
// Emission

std::string emit_radial_profile(const PhasePair& pair) {
  const Grid& g = pair.grid();
  const double h = g.h();
  std::vector<double> s1, s2;
  std::vector<int> count;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto shell = static_cast<std::size_t>(std::sqrt(g.squared_distance_from_origin(k)) / h);
    if (shell >= count.size()) {
      count.resize(shell + 1, 0);
      s1.resize(shell + 1, 0.0);
      s2.resize(shell + 1, 0.0);
    }
    ++count[shell];
    s1[shell] += pair.f1()[k];
    s2[shell] += pair.f2()[k];
  }
  std::ostringstream os;
  os << "radius,f1,f2\n" << std::setprecision(12);
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (count[i] == 0) continue;
    os << (i + 0.5) * h << ',' << s1[i] / count[i] << ',' << s2[i] / count[i] << '\n';
  }
  return os.str();
}

std::string usage() {
  return "usage: twophase <command> [options]\n"
         "commands:\n"
         "  minimize --config FILE [--out DIR]\n"
         "  phase-diagram --config FILE [--out DIR]\n"
         "  tangent-study --config FILE [--out DIR]\n"
         "  analytic --c11 X --c22 X --m1 X --m2 X --dim N [--cells N --h X --kernel K --out DIR]\n"
         "  energy --f1 FILE --f2 FILE --c11 X --c22 X --kernel K [--rho --sigma --table --coulomb-constant]\n"
         "  verify [kernel|identities|projection|rearrange] [--seed N --out FILE]\n"
         "exit codes: 0 ok, 1 verify failure, 2 invalid config or usage, 3 infeasible, 4 not converged\n";
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct KernelFlags {
  std::string kind = "coulomb";
  double rho = 1.0;
  double sigma = 1.0;
  std::string table;
  std::string constant = "fundamental";

  void attach(CLI::App* app) {
    app->add_option("--kernel", kind, "coulomb, top_hat, tent, gaussian or tabulated");
    app->add_option("--rho", rho, "top_hat / tent range");
    app->add_option("--sigma", sigma, "gaussian width");
    app->add_option("--table", table, "tabulated kernel file");
    app->add_option("--coulomb-constant", constant, "fundamental or printed");
  }
  KernelSpec make(int dim) const {
    return as_config("kernel", [&] { return make_kernel(kind, dim, rho, sigma, table, constant); });
  }
};

int status_exit(SolverStatus s) {
  return s == SolverStatus::converged ? kExitOk : kExitNotConverged;
}

fs::path output_dir(const ExperimentConfig& cfg, const std::string& override_dir) {
  const fs::path dir = override_dir.empty() ? cfg.output_dir : fs::path(override_dir);
  fs::create_directories(dir);
  return dir;
}

void summary(std::ostream& out, json line) { out << line.dump() << '\n'; }

int cmd_minimize(const std::string& config, const std::string& out_dir, std::ostream& out) {
  const auto cfg = load_experiment(config);
  const auto result = minimize(cfg.solver);
  const fs::path dir = output_dir(cfg, out_dir);
  json doc = result.to_json();
  doc["config"] = cfg.solver.to_json();
  doc["energy_trace"] = result.energy_trace;
  write_field(result.pair.f1(), dir / "f1.df");
  write_field(result.pair.f2(), dir / "f2.df");
  write_file_atomic(dir / "profile.csv", emit_radial_profile(result.pair));
  write_file_atomic(dir / "result.json", doc.dump(2) + "\n");
  summary(out, {{"command", "minimize"},
                {"status", to_string(result.status)},
                {"energy", result.stationarity.energy.total},
                {"iterations", result.iterations},
                {"regime", to_string(result.regime.label)},
                {"output", dir.string()}});
  return status_exit(result.status);
}

// Feasibility and tolerances only; coefficients are checked per row.
void validate_base(SolverConfig s, Coefficients c) {
  s.coefficients = c;
  s.validate();
}

int cmd_phase_diagram(const std::string& config, const std::string& out_dir, std::ostream& out) {
  const auto cfg = load_experiment(config);
  if (cfg.sweep_c11.empty() || cfg.sweep_c22.empty()) {
    throw ConfigError("phase-diagram needs sweep.c11 and sweep.c22");
  }
  validate_base(cfg.solver, {-0.5, -0.5});
  std::vector<Coefficients> points;
  for (double a : cfg.sweep_c11) {
    for (double b : cfg.sweep_c22) points.push_back({a, b});
  }
  const auto rows = sweep(points, cfg.solver);
  const fs::path dir = output_dir(cfg, out_dir);
  std::ostringstream csv;
  csv << "c11,c22,energy,regime,l1_to_analytic,status\n";
  json all = json::array();
  int not_converged = 0;
  for (const auto& r : rows) {
    csv << format_number(r.c11) << ',' << format_number(r.c22) << ',' << csv_field(r.energy)
        << ',' << r.regime << ',' << csv_field(r.l1_to_analytic) << ',' << r.status << '\n';
    all.push_back(r.to_json());
    if (r.status == "max_iters" || r.status == "boundary_mass_violation") ++not_converged;
  }
  write_file_atomic(dir / "phase_diagram.csv", csv.str());
  write_file_atomic(dir / "phase_diagram.json", all.dump(2) + "\n");
  summary(out, {{"command", "phase-diagram"},
                {"rows", rows.size()},
                {"not_converged", not_converged},
                {"output", dir.string()}});
  return not_converged == 0 ? kExitOk : kExitNotConverged;
}

int cmd_tangent(const std::string& config, const std::string& out_dir, std::ostream& out) {
  const auto cfg = load_experiment(config);
  if (cfg.tangent_c.empty()) throw ConfigError("tangent-study needs tangent.c");
  validate_base(cfg.solver, {-2.0, -2.0});
  const auto study = as_config("tangent.c", [&] { return tangent_ball_study(cfg.tangent_c, cfg.solver); });
  const fs::path dir = output_dir(cfg, out_dir);
  std::ostringstream csv;
  csv << "c,energy,l1_to_tangent,separation,tangent_distance,status,iterations\n";
  int not_converged = 0;
  for (const auto& r : study.rows) {
    csv << format_number(r.c) << ',' << format_number(r.energy) << ','
        << format_number(r.l1_to_tangent) << ',' << format_number(r.separation) << ','
        << format_number(r.tangent_distance) << ',' << r.status << ',' << r.iterations << '\n';
    if (r.status != "converged") ++not_converged;
  }
  write_file_atomic(dir / "tangent_study.csv", csv.str());
  summary(out, {{"command", "tangent-study"},
                {"rows", study.rows.size()},
                {"non_increasing", study.non_increasing},
                {"final_l1", study.rows.back().l1_to_tangent},
                {"not_converged", not_converged},
                {"output", dir.string()}});
  return not_converged == 0 ? kExitOk : kExitNotConverged;
}

struct AnalyticFlags {
  double c11 = 0.0, c22 = 0.0, m1 = 1.0, m2 = 1.0;
  int dim = 2;
  int cells = 0;
  double h = 0.0;
  std::string out = ".";
  KernelFlags kernel;
};

int cmd_analytic(const AnalyticFlags& f, std::ostream& out) {
  if (f.dim < 1 || f.dim > 3) throw ConfigError("--dim must be 1, 2 or 3");
  if (!(f.m1 > 0.0) || !(f.m2 > 0.0)) throw ConfigError("masses must be positive");
  const int cells = f.cells > 0 ? f.cells : default_cells(f.dim);
  const double h = f.h > 0.0 ? f.h : auto_spacing(f.m1 + f.m2, f.dim, cells);
  const Grid grid = Grid::centered(f.dim, cells, h);
  if (f.m1 + f.m2 > grid.capacity() * (1.0 - kFeasibilityMargin)) {
    throw InfeasibleError("masses exceed the box capacity");
  }
  const KernelSpec spec = f.kernel.make(f.dim);
  const Regime regime = classify_regime(f.c11, f.c22, f.m1, f.m2, f.dim, spec.kind);
  if (!regime.has_closed_form()) {
    throw ConfigError("no closed form for regime " + to_string(regime.label));
  }
  const auto a = analytic_minimizer(regime, f.c11, f.c22, f.m1, f.m2, grid);
  const auto e = energy(a.pair, spec);
  const fs::path dir(f.out);
  fs::create_directories(dir);
  write_field(a.pair.f1(), dir / "f1.df");
  write_field(a.pair.f2(), dir / "f2.df");
  write_file_atomic(dir / "profile.csv", emit_radial_profile(a.pair));
  const json doc = {{"regime", to_string(regime.label)},
                    {"witnesses", regime.witnesses},
                    {"c11", f.c11},
                    {"c22", f.c22},
                    {"m1", f.m1},
                    {"m2", f.m2},
                    {"field_masses", {a.pair.f1().mass(), a.pair.f2().mass()}},
                    {"grid", {{"dim", f.dim}, {"cells", cells}, {"h", h}}},
                    {"kernel", spec.name()},
                    {"energy", twophase::to_json(e)},
                    {"description", a.description.to_json()}};
  write_file_atomic(dir / "analytic.json", doc.dump(2) + "\n");
  summary(out, {{"command", "analytic"},
                {"regime", to_string(regime.label)},
                {"energy", e.total},
                {"output", dir.string()}});
  return kExitOk;
}

int cmd_energy(const std::string& f1, const std::string& f2, double c11, double c22,
               const KernelFlags& kernel, std::ostream& out) {
  const auto a = read_field(f1);
  const auto b = read_field(f2);
  if (a.grid() != b.grid()) throw ConfigError("--f1 and --f2 are on different grids");
  const PhasePair pair(a, b, {c11, c22});
  json line = twophase::to_json(energy(pair, kernel.make(a.grid().dim())));
  line["command"] = "energy";
  summary(out, line);
  return kExitOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& report,
               std::ostream& out) {
  std::vector<std::string> names = suite_names();
  if (!suite.empty()) {
    if (std::find(names.begin(), names.end(), suite) == names.end()) {
      throw ConfigError("unknown suite '" + suite + "'");
    }
    names = {suite};
  }
  json all = json::array();
  bool ok = true;
  for (const auto& n : names) {
    const auto r = run_suite(n, seed);
    ok = ok && r.pass();
    json line = {{"command", "verify"},
                 {"suite", n},
                 {"pass", r.pass()},
                 {"checks_run", r.checks.size()},
                 {"failures", r.failures()},
                 {"seconds", r.seconds}};
    if (const Check* w = r.worst()) line["worst"] = w->name;
    summary(out, line);
    all.push_back(r.to_json());
  }
  if (!report.empty()) write_file_atomic(report, all.dump(2) + "\n");
  return ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-phase nonlocal energy minimization", "twophase"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");

  std::string config, out_dir;
  auto* minimize_cmd = app.add_subcommand("minimize", "minimize the energy from a config");
  auto* phase_cmd = app.add_subcommand("phase-diagram", "sweep the coefficient plane");
  auto* tangent_cmd = app.add_subcommand("tangent-study", "trend towards tangent balls");
  for (auto* sub : {minimize_cmd, phase_cmd, tangent_cmd}) {
    sub->add_option("--config", config, "config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
  }

  AnalyticFlags af;
  auto* analytic_cmd = app.add_subcommand("analytic", "rasterize the closed-form minimizer");
  analytic_cmd->add_option("--c11", af.c11)->required();
  analytic_cmd->add_option("--c22", af.c22)->required();
  analytic_cmd->add_option("--m1", af.m1)->required();
  analytic_cmd->add_option("--m2", af.m2)->required();
  analytic_cmd->add_option("--dim", af.dim)->required();
  analytic_cmd->add_option("--cells", af.cells, "cells per axis");
  analytic_cmd->add_option("--h", af.h, "cell width (default: box of 5 radii)");
  analytic_cmd->add_option("--out", af.out, "output directory");
  af.kernel.attach(analytic_cmd);

  std::string ef1, ef2;
  double ec11 = 0.0, ec22 = 0.0;
  KernelFlags ek;
  auto* energy_cmd = app.add_subcommand("energy", "evaluate the energy of two field files");
  energy_cmd->add_option("--f1", ef1)->required();
  energy_cmd->add_option("--f2", ef2)->required();
  energy_cmd->add_option("--c11", ec11)->required();
  energy_cmd->add_option("--c22", ec22)->required();
  ek.attach(energy_cmd);

  std::string suite, report;
  std::uint64_t seed = 0;
  auto* verify_cmd = app.add_subcommand("verify", "run property suites");
  verify_cmd->add_option("suite", suite, "suite name (default: all)");
  verify_cmd->add_option("--seed", seed);
  verify_cmd->add_option("--out", report, "JSON report file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << usage();
    return kExitInvalid;
  }

  try {
    if (minimize_cmd->parsed()) return cmd_minimize(config, out_dir, out);
    if (phase_cmd->parsed()) return cmd_phase_diagram(config, out_dir, out);
    if (tangent_cmd->parsed()) return cmd_tangent(config, out_dir, out);
    if (analytic_cmd->parsed()) return cmd_analytic(af, out);
    if (energy_cmd->parsed()) return cmd_energy(ef1, ef2, ec11, ec22, ek, out);
    if (verify_cmd->parsed()) return cmd_verify(suite, seed, report, out);
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    summary(out, {{"status", "infeasible"}, {"message", e.what()}});
    return kExitInfeasible;
  } catch (const std::invalid_argument& e) {
    err << "invalid: " << e.what() << "\n";
    summary(out, {{"status", "invalid"}, {"message", e.what()}});
    return kExitInvalid;
  } catch (const std::runtime_error& e) {
    // Unreadable inputs and unwritable outputs.
    err << "error: " << e.what() << "\n";
    summary(out, {{"status", "invalid"}, {"message", e.what()}});
    return kExitInvalid;
  }
  err << usage();
  return kExitInvalid;
}

}  // namespace twophase::cli
