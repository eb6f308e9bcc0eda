#include "twophase/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "twophase/field_io.hpp"

namespace twophase {

// ---------------------------------------------------------------------------
// Projection

std::pair<double, double> project_triangle(double x, double y) {
  const double cx = std::max(x, 0.0);
  const double cy = std::max(y, 0.0);
  if (cx + cy <= 1.0) return {cx, cy};
  const double t = std::clamp(0.5 * (1.0 + x - y), 0.0, 1.0);
  return {t, 1.0 - t};
}

namespace {

struct DualEval {
  double M1 = 0.0, M2 = 0.0;     // masses of the projected point
  double H11 = 0.0, H12 = 0.0, H22 = 0.0;  // mass Jacobian
  double D = 0.0;                // dual objective
};

DualEval eval_dual(std::span<const double> a, std::span<const double> b,
                   double l1, double l2, double m1, double m2, double hN) {
  DualEval e;
  double j11 = 0.0, j12 = 0.0, j22 = 0.0, m1s = 0.0, m2s = 0.0, d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[k] - l1;
    const double y = b[k] - l2;
    const double cx = std::max(x, 0.0);
    const double cy = std::max(y, 0.0);
    double px, py;
    if (cx + cy <= 1.0) {
      px = cx;
      py = cy;
      if (x > 0.0) j11 -= 1.0;
      if (y > 0.0) j22 -= 1.0;
    } else {
      const double t = 0.5 * (1.0 + x - y);
      if (t >= 1.0) {
        px = 1.0;
        py = 0.0;
      } else if (t <= 0.0) {
        px = 0.0;
        py = 1.0;
      } else {
        px = t;
        py = 1.0 - t;
        j11 -= 0.5;
        j22 -= 0.5;
        j12 += 0.5;
      }
    }
    m1s += px;
    m2s += py;
    d += 0.5 * ((px - x) * (px - x) + (py - y) * (py - y)) + l1 * a[k] +
         l2 * b[k] - 0.5 * (l1 * l1 + l2 * l2);
  }
  e.M1 = hN * m1s;
  e.M2 = hN * m2s;
  e.H11 = hN * j11;
  e.H12 = hN * j12;
  e.H22 = hN * j22;
  e.D = hN * d - l1 * m1 - l2 * m2;
  return e;
}

// Finds x with f(x) = target for a non-increasing continuous f.
template <class F>
double bisect_decreasing(F f, double target, double tol, double guess) {
  double lo = guess - 1.0, hi = guess + 1.0;
  double step = 1.0;
  for (int i = 0; i < 200 && f(lo) < target; ++i) {
    step *= 2.0;
    lo -= step;
  }
  step = 1.0;
  for (int i = 0; i < 200 && f(hi) > target; ++i) {
    step *= 2.0;
    hi += step;
  }
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < 200; ++i) {
    mid = 0.5 * (lo + hi);
    const double v = f(mid);
    if (std::abs(v - target) <= tol) break;
    if (v > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-16 * std::max(1.0, std::abs(mid))) break;
  }
  return mid;
}

Projection finish(std::span<const double> a, std::span<const double> b,
                  double l1, double l2, const Grid& grid) {
  std::vector<double> f1(a.size()), f2(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto [x, y] = project_triangle(a[k] - l1, b[k] - l2);
    f1[k] = x;
    f2[k] = y;
  }
  Projection p;
  p.f1 = DensityField(grid, std::move(f1));
  p.f2 = DensityField(grid, std::move(f2));
  p.lambda1 = l1;
  p.lambda2 = l2;
  return p;
}

// One active phase: clamp(r - lambda, 0, 1) with the given mass.
Projection project_single(std::span<const double> r, double m, int phase,
                          const Grid& grid) {
  const double hN = grid.cell_volume();
  auto mass = [&](double l) {
    double s = 0.0;
    for (double v : r) s += std::clamp(v - l, 0.0, 1.0);
    return hN * s;
  };
  const double l = m > 0.0 ? bisect_decreasing(mass, m, 1e-10 * m, 0.0) : 0.0;
  std::vector<double> f(r.size(), 0.0);
  if (m > 0.0) {
    for (std::size_t k = 0; k < r.size(); ++k) f[k] = std::clamp(r[k] - l, 0.0, 1.0);
  }
  Projection p;
  DensityField active(grid, std::move(f));
  DensityField zero = DensityField::zeros(grid);
  p.f1 = phase == 1 ? active : zero;
  p.f2 = phase == 1 ? zero : active;
  (phase == 1 ? p.lambda1 : p.lambda2) = l;
  p.used_bisection = true;
  return p;
}

}  // namespace

Projection project_admissible(std::span<const double> raw1,
                              std::span<const double> raw2, double m1,
                              double m2, const Grid& grid,
                              std::optional<std::pair<double, double>> hint) {
  if (raw1.size() != grid.size() || raw2.size() != grid.size()) {
    throw SolverError("raw fields do not match the grid");
  }
  if (!(m1 >= 0.0) || !(m2 >= 0.0)) throw SolverError("masses must be nonnegative");
  if (m1 + m2 > grid.capacity() * (1.0 - kFeasibilityMargin)) {
    std::ostringstream msg;
    msg << "masses m1 + m2 = " << m1 + m2 << " do not fit into the box of capacity "
        << grid.capacity();
    throw InfeasibleError(msg.str());
  }
  if (m1 == 0.0 && m2 == 0.0) {
    Projection p;
    p.f1 = DensityField::zeros(grid);
    p.f2 = DensityField::zeros(grid);
    return p;
  }
  if (m1 == 0.0) return project_single(raw2, m2, 2, grid);
  if (m2 == 0.0) return project_single(raw1, m1, 1, grid);

  const double hN = grid.cell_volume();
  const double tol1 = 1e-10 * m1, tol2 = 1e-10 * m2;
  double l1 = hint ? hint->first : 0.0;
  double l2 = hint ? hint->second : 0.0;
  auto done = [&](const DualEval& e) {
    return std::abs(e.M1 - m1) <= tol1 && std::abs(e.M2 - m2) <= tol2;
  };

  DualEval e = eval_dual(raw1, raw2, l1, l2, m1, m2, hN);
  int it = 0;
  for (; it < 100 && !done(e); ++it) {
    const double g1 = e.M1 - m1, g2 = e.M2 - m2;
    // Newton step on the concave dual; the Jacobian is negative semidefinite.
    const double scale = std::abs(e.H11) + std::abs(e.H22);
    const double mu = 1e-12 * scale;
    const double a11 = e.H11 - mu, a22 = e.H22 - mu, a12 = e.H12;
    const double det = a11 * a22 - a12 * a12;
    if (!(scale > 0.0) || !(det > 1e-14 * scale * scale)) {
      break;
    }
    const double d1 = -(a22 * g1 - a12 * g2) / det;
    const double d2 = -(-a12 * g1 + a11 * g2) / det;
    const double slope = g1 * d1 + g2 * d2;
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      const DualEval t = eval_dual(raw1, raw2, l1 + alpha * d1, l2 + alpha * d2, m1, m2, hN);
      if (t.D >= e.D + 1e-4 * alpha * slope || done(t)) {
        l1 += alpha * d1;
        l2 += alpha * d2;
        e = t;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      break;
    }
  }

  bool bisection = false;
  if (!done(e)) {
    bisection = true;
    // Nested bisection: lambda1(lambda2) matches m1, then the reduced
    // mass of phase 2 is non-increasing in lambda2.
    auto inner = [&](double lam2) {
      return bisect_decreasing(
          [&](double lam1) { return eval_dual(raw1, raw2, lam1, lam2, m1, m2, hN).M1; },
          m1, tol1 * 0.5, l1);
    };
    l2 = bisect_decreasing(
        [&](double lam2) {
          const double lam1 = inner(lam2);
          return eval_dual(raw1, raw2, lam1, lam2, m1, m2, hN).M2;
        },
        m2, tol2, l2);
    l1 = inner(l2);
    e = eval_dual(raw1, raw2, l1, l2, m1, m2, hN);
    if (!done(e)) {
      std::ostringstream msg;
      msg << "projection did not reach the mass tolerance (residuals "
          << e.M1 - m1 << ", " << e.M2 - m2 << ")";
      throw SolverError(msg.str());
    }
  }
  Projection p = finish(raw1, raw2, l1, l2, grid);
  p.iterations = it;
  p.used_bisection = bisection;
  return p;
}

// ---------------------------------------------------------------------------
// Configuration

std::string to_string(StepRule r) {
  return r == StepRule::fixed ? "fixed" : "backtracking";
}

std::string to_string(InitKind k) {
  switch (k) {
    case InitKind::analytic_regime: return "analytic_regime";
    case InitKind::random: return "random";
    case InitKind::mixed_ball: return "mixed_ball";
    case InitKind::from_files: return "from_files";
  }
  return "?";
}

std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iters: return "max_iters";
    case SolverStatus::boundary_mass_violation: return "boundary_mass_violation";
  }
  return "?";
}

InitKind parse_init_kind(const std::string& s) {
  if (s == "analytic_regime" || s == "analytic") return InitKind::analytic_regime;
  if (s == "random") return InitKind::random;
  if (s == "mixed_ball") return InitKind::mixed_ball;
  if (s == "from_files") return InitKind::from_files;
  throw SolverError("unknown init '" + s + "'");
}

StepRule parse_step_rule(const std::string& s) {
  if (s == "fixed") return StepRule::fixed;
  if (s == "backtracking") return StepRule::backtracking;
  throw SolverError("unknown step rule '" + s + "'");
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw SolverError("max_iters must be >= 1");
  if (!(energy_tol > 0.0) || !(stat_tol > 0.0)) {
    throw SolverError("tolerances must be positive");
  }
  if (!(beta > 0.0 && beta < 1.0)) throw SolverError("beta must lie in (0, 1)");
  if (!(armijo > 0.0 && armijo < 1.0)) throw SolverError("armijo must lie in (0, 1)");
  if (tau < 0.0 || !std::isfinite(tau)) throw SolverError("tau must be >= 0");
  if (starts < 0) throw SolverError("starts must be >= 0");
  if (recenter_every < 0) throw SolverError("recenter_every must be >= 0");
  if (!(boundary_mass_fraction > 0.0)) {
    throw SolverError("boundary_mass_fraction must be positive");
  }
  if (coefficients.c11 > 0.0 || coefficients.c22 > 0.0) {
    throw SolverError("positive self-interaction coefficients are refused: the "
                      "energy is not bounded below on the admissible class");
  }
  if (!(m1 > 0.0) || !(m2 > 0.0)) throw SolverError("masses must be positive");
  if (init == InitKind::from_files && (init_f1.empty() || init_f2.empty())) {
    throw SolverError("init from_files needs init_f1 and init_f2");
  }
  if (kernel.kind == KernelKind::coulomb && kernel.coulomb_dim != grid.dim()) {
    throw SolverError("coulomb kernel dimension does not match the grid");
  }
  if (m1 + m2 > grid.capacity() * (1.0 - kFeasibilityMargin)) {
    std::ostringstream msg;
    msg << "masses m1 + m2 = " << m1 + m2
        << " do not fit into the box of capacity " << grid.capacity();
    throw InfeasibleError(msg.str());
  }
}

int SolverConfig::effective_starts() const {
  if (starts > 0) return starts;
  return init == InitKind::random ? 5 : 1;
}

nlohmann::json SolverConfig::to_json() const {
  return {{"dim", grid.dim()},
          {"cells", grid.cells(0)},
          {"h", grid.h()},
          {"kernel", kernel.name()},
          {"c11", coefficients.c11},
          {"c22", coefficients.c22},
          {"m1", m1},
          {"m2", m2},
          {"max_iters", max_iters},
          {"energy_tol", energy_tol},
          {"stat_tol", stat_tol},
          {"step_rule", to_string(step_rule)},
          {"tau", tau},
          {"init", to_string(init)},
          {"seed", seed},
          {"starts", effective_starts()}};
}

nlohmann::json SolverResult::to_json() const {
  return {{"status", to_string(status)},
          {"I_value", I_value},
          {"energy", twophase::to_json(stationarity.energy)},
          {"iterations", iterations},
          {"stat_norm", stat_norm},
          {"regime", to_string(regime.label)},
          {"seed", seed},
          {"start", start},
          {"m1", pair.m1()},
          {"m2", pair.m2()},
          {"stationarity", stationarity.to_json()},
          {"diagnostics", diagnostics}};
}

double default_step(Coefficients c, const Convolver& conv) {
  const double cmax = std::max({std::abs(c.c11), std::abs(c.c22), 1.0});
  return 1.0 / (2.0 * cmax * conv.operator_norm());
}

// ---------------------------------------------------------------------------
// Initialization

PhasePair random_initial_pair(const Grid& grid, double m1, double m2,
                              Coefficients c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int dim = grid.dim();
  const double support = 1.6 * ball_radius(m1 + m2, dim);
  std::array<std::vector<double>, 2> raw{std::vector<double>(grid.size()),
                                         std::vector<double>(grid.size())};
  for (auto& r : raw) {
    struct Bump {
      Point c;
      double s, a;
    };
    std::vector<Bump> bumps;
    for (int i = 0; i < 3; ++i) {
      Bump b{{0.0, 0.0, 0.0}, (0.3 + 0.4 * u(rng)) * support, 0.5 + 0.5 * u(rng)};
      // Uniform point in the support ball by rejection.
      for (;;) {
        double d2 = 0.0;
        for (int a = 0; a < dim; ++a) {
          b.c[a] = (2.0 * u(rng) - 1.0) * support;
          d2 += b.c[a] * b.c[a];
        }
        if (d2 <= support * support) break;
      }
      bumps.push_back(b);
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (grid.squared_distance_from_origin(k) > support * support) {
        r[k] = -2.0;
        continue;
      }
      const Point p = grid.center(k);
      double v = 0.2;
      for (const auto& b : bumps) {
        double d2 = 0.0;
        for (int a = 0; a < dim; ++a) d2 += (p[a] - b.c[a]) * (p[a] - b.c[a]);
        v += b.a * std::exp(-0.5 * d2 / (b.s * b.s));
      }
      r[k] = v;
    }
  }
  auto p = project_admissible(raw[0], raw[1], m1, m2, grid);
  return PhasePair(std::move(p.f1), std::move(p.f2), c, m1, m2);
}

Regime nearest_closed_form(double c11, double c22, double m1, double m2,
                           int dim, KernelKind kind) {
  Regime r = classify_regime(c11, c22, m1, m2, dim, kind);
  if (r.has_closed_form()) return r;
  Regime n;
  if (r.label == RegimeLabel::open_segregated) {
    n = c11 >= c22 ? classify_regime(-1.0, c22, m1, m2, dim, kind)
                   : classify_regime(c11, -1.0, m1, m2, dim, kind);
  } else {
    n = classify_regime(c11, c22, m1, m2, dim, KernelKind::coulomb);
    if (!n.has_closed_form()) {
      n.label = RegimeLabel::coulomb_mixed_core_annulus_i;
    }
  }
  n.witnesses.insert(n.witnesses.begin(),
                     "stand-in for " + to_string(r.label) + " (initialization only)");
  return n;
}

PhasePair initial_pair(const SolverConfig& cfg, std::uint64_t seed) {
  const auto c = cfg.coefficients;
  switch (cfg.init) {
    case InitKind::analytic_regime: {
      const Regime r = nearest_closed_form(c.c11, c.c22, cfg.m1, cfg.m2,
                                           cfg.grid.dim(), cfg.kernel.kind);
      return analytic_minimizer(r, c.c11, c.c22, cfg.m1, cfg.m2, cfg.grid).pair;
    }
    case InitKind::random:
      return random_initial_pair(cfg.grid, cfg.m1, cfg.m2, c, seed);
    case InitKind::mixed_ball: {
      Regime r;
      r.label = RegimeLabel::degenerate_equal_minus_one;
      return analytic_minimizer(r, c.c11, c.c22, cfg.m1, cfg.m2, cfg.grid).pair;
    }
    case InitKind::from_files: {
      const auto a = read_field(cfg.init_f1);
      const auto b = read_field(cfg.init_f2);
      if (a.grid() != cfg.grid || b.grid() != cfg.grid) {
        throw SolverError("initial fields do not match the configured grid");
      }
      auto p = project_admissible(a.values(), b.values(), cfg.m1, cfg.m2, cfg.grid);
      return PhasePair(std::move(p.f1), std::move(p.f2), c, cfg.m1, cfg.m2);
    }
  }
  throw SolverError("unhandled init kind");
}

// ---------------------------------------------------------------------------
// Centering and comparison

Point barycenter(const Grid& grid, std::span<const double> f1,
                 std::span<const double> f2) {
  Point b{0.0, 0.0, 0.0};
  double m = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double w = f1[k] + f2[k];
    if (w == 0.0) continue;
    const Point p = grid.center(k);
    for (int a = 0; a < 3; ++a) b[a] += w * p[a];
    m += w;
  }
  if (m > 0.0) {
    for (double& x : b) x /= m;
  }
  return b;
}

namespace {

std::array<int, 3> centering_shift(const Grid& grid, std::span<const double> f1,
                                   std::span<const double> f2) {
  const Point b = barycenter(grid, f1, f2);
  std::array<int, 3> s{0, 0, 0};
  for (int a = 0; a < grid.dim(); ++a) {
    s[a] = -static_cast<int>(std::lround(b[a] / grid.h()));
  }
  return s;
}

double value_sum(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

bool lossless(std::span<const double> before, std::span<const double> after) {
  return std::abs(value_sum(before) - value_sum(after)) <=
         1e-12 * std::max(1.0, value_sum(before));
}

}  // namespace

PhasePair center(const PhasePair& pair) {
  const Grid& grid = pair.grid();
  const auto s = centering_shift(grid, pair.f1().values(), pair.f2().values());
  if (s == std::array<int, 3>{0, 0, 0}) return pair;
  auto a = shift_values(grid, pair.f1().values(), s);
  auto b = shift_values(grid, pair.f2().values(), s);
  if (!lossless(pair.f1().values(), a) || !lossless(pair.f2().values(), b)) {
    throw SolverError("centering would move mass out of the box");
  }
  return PhasePair(DensityField(grid, std::move(a)), DensityField(grid, std::move(b)),
                   pair.coefficients(), pair.m1(), pair.m2());
}

Comparison compare(const PhasePair& pair, const PhasePair& reference) {
  const Grid& grid = pair.grid();
  if (grid != reference.grid()) throw SolverError("compare: grids differ");
  const auto n = grid.cells();
  const auto g1 = reference.f1().values();
  const auto g2 = reference.f2().values();
  const double total = value_sum(pair.f1().values()) + value_sum(pair.f2().values()) +
                       value_sum(g1) + value_sum(g2);

  Comparison best;
  best.l1_distance = std::numeric_limits<double>::infinity();
  const int reflections = grid.dim() == 1 ? 2 : 1;
  for (int r = 0; r < reflections; ++r) {
    // Support of the (possibly reflected) pair.
    struct Cell {
      std::array<int, 3> idx;
      double a, b;
    };
    std::vector<Cell> support;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double a = pair.f1()[k], b = pair.f2()[k];
      if (a == 0.0 && b == 0.0) continue;
      auto idx = grid.multi_index(k);
      if (r == 1) idx[0] = n[0] - 1 - idx[0];
      support.push_back({idx, a, b});
    }
    std::array<int, 3> s{0, 0, 0};
    for (s[0] = -(n[0] - 1); s[0] <= n[0] - 1; ++s[0]) {
      for (s[1] = -(n[1] - 1); s[1] <= n[1] - 1; ++s[1]) {
        for (s[2] = -(n[2] - 1); s[2] <= n[2] - 1; ++s[2]) {
          // L1 = total - 2 sum min(f(k), g(k + s)) over overlapping cells.
          double overlap = 0.0;
          for (const auto& c : support) {
            std::array<int, 3> j{c.idx[0] + s[0], c.idx[1] + s[1], c.idx[2] + s[2]};
            if (j[0] < 0 || j[0] >= n[0] || j[1] < 0 || j[1] >= n[1] || j[2] < 0 ||
                j[2] >= n[2]) {
              continue;
            }
            const std::size_t q = grid.linear_index(j);
            overlap += std::min(c.a, g1[q]) + std::min(c.b, g2[q]);
          }
          const double d = std::max(0.0, total - 2.0 * overlap) * grid.cell_volume();
          if (d < best.l1_distance - 1e-15) {
            best.l1_distance = d;
            best.best_shift = s;
            best.best_reflection = r == 1;
          }
        }
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Minimization

namespace {

struct Iterate {
  std::vector<double> f1, f2, V1, V2;
  double E = 0.0;
};

void gradient(const Iterate& x, Coefficients c, std::vector<double>& W1,
              std::vector<double>& W2) {
  for (std::size_t k = 0; k < x.f1.size(); ++k) {
    W1[k] = 2.0 * (c.c11 * x.V1[k] - x.V2[k]);
    W2[k] = 2.0 * (c.c22 * x.V2[k] - x.V1[k]);
  }
}

Iterate make_iterate(const Convolver& conv, std::vector<double> f1,
                     std::vector<double> f2, Coefficients c) {
  Iterate x;
  x.f1 = std::move(f1);
  x.f2 = std::move(f2);
  x.V1 = conv.apply(x.f1);
  x.V2 = conv.apply(x.f2);
  x.E = energy_from_potentials(conv.grid(), x.f1, x.f2, x.V1, x.V2, c).total;
  return x;
}

SolverResult run_once(const SolverConfig& cfg, const Convolver& conv,
                      const PhasePair& start, std::uint64_t seed, int start_index) {
  const Grid& grid = cfg.grid;
  const Coefficients c = cfg.coefficients;
  const double hN = grid.cell_volume();
  const double tau0 = cfg.tau > 0.0 ? cfg.tau : default_step(c, conv);
  const double tau_max = 1e3 * tau0;
  const double boundary_limit = cfg.boundary_mass_fraction * (cfg.m1 + cfg.m2);

  Iterate x = make_iterate(conv, std::vector<double>(start.f1().values().begin(), start.f1().values().end()),
                           std::vector<double>(start.f2().values().begin(), start.f2().values().end()), c);
  SolverResult res;
  res.seed = seed;
  res.start = start_index;
  res.energy_trace.push_back(x.E);
  res.status = SolverStatus::max_iters;

  std::vector<double> W1(grid.size()), W2(grid.size()), r1(grid.size()), r2(grid.size());
  std::optional<std::pair<double, double>> hint;
  double tau = tau0;
  int accepted = 0;
  int bisections = 0;
  bool stalled = false;

  auto trial = [&](double t) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      r1[k] = x.f1[k] - t * W1[k];
      r2[k] = x.f2[k] - t * W2[k];
    }
    auto p = project_admissible(r1, r2, cfg.m1, cfg.m2, grid, hint);
    hint = std::pair{p.lambda1, p.lambda2};
    if (p.used_bisection) ++bisections;
    return make_iterate(conv, std::vector<double>(p.f1.values().begin(), p.f1.values().end()),
                        std::vector<double>(p.f2.values().begin(), p.f2.values().end()), c);
  };
  auto descent = [&](const Iterate& y) {
    double s = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      s += W1[k] * (y.f1[k] - x.f1[k]) + W2[k] * (y.f2[k] - x.f2[k]);
    }
    return hN * s;
  };

  for (int it = 0; it < cfg.max_iters; ++it) {
    if (boundary_layer_mass(grid, x.f1) + boundary_layer_mass(grid, x.f2) > boundary_limit) {
      res.status = SolverStatus::boundary_mass_violation;
      break;
    }
    gradient(x, c, W1, W2);
    Iterate y = trial(tau);
    double sq = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double d1 = y.f1[k] - x.f1[k], d2 = y.f2[k] - x.f2[k];
      sq += d1 * d1 + d2 * d2;
    }
    res.stat_norm = std::sqrt(hN * sq) / tau;
    const double scale = std::max(std::abs(x.E), 1e-300);
    const double rel = (x.E - y.E) / scale;
    if (rel < cfg.energy_tol && res.stat_norm < cfg.stat_tol) {
      if (y.E < x.E) {
        x = std::move(y);
        res.energy_trace.push_back(x.E);
        ++accepted;
      }
      res.status = SolverStatus::converged;
      break;
    }

    bool first_try = true;
    for (;;) {
      const bool ok = cfg.step_rule == StepRule::backtracking
                          ? y.E <= x.E + cfg.armijo * descent(y)
                          : y.E <= x.E + 1e-12 * scale;
      if (ok) break;
      first_try = false;
      tau *= cfg.beta;
      if (tau < 1e-12 * tau0) {
        stalled = true;
        break;
      }
      y = trial(tau);
    }
    if (stalled) {
      res.status = SolverStatus::converged;
      break;
    }
    x = std::move(y);
    res.energy_trace.push_back(x.E);
    ++accepted;
    if (cfg.step_rule == StepRule::backtracking && cfg.grow_step && first_try) {
      tau = std::min(tau / cfg.beta, tau_max);
    }

    if (cfg.debug_checks) {
      PhasePair(DensityField(grid, x.f1), DensityField(grid, x.f2), c, cfg.m1, cfg.m2);
    }
    if (cfg.recenter_every > 0 && accepted % cfg.recenter_every == 0) {
      const auto s = centering_shift(grid, x.f1, x.f2);
      if (s != std::array<int, 3>{0, 0, 0}) {
        auto a = shift_values(grid, x.f1, s);
        auto b = shift_values(grid, x.f2, s);
        if (lossless(x.f1, a) && lossless(x.f2, b)) {
          const double before = x.E;
          x = make_iterate(conv, std::move(a), std::move(b), c);
          // A translation leaves the energy unchanged up to rounding.
          x.E = std::min(x.E, before);
        }
      }
    }
  }

  if (res.status != SolverStatus::boundary_mass_violation &&
      boundary_layer_mass(grid, x.f1) + boundary_layer_mass(grid, x.f2) > boundary_limit) {
    res.status = SolverStatus::boundary_mass_violation;
  }
  res.iterations = accepted;
  res.pair = PhasePair(DensityField(grid, x.f1), DensityField(grid, x.f2), c,
                       cfg.m1, cfg.m2);
  res.I_value = x.E;
  res.regime = classify_regime(c.c11, c.c22, cfg.m1, cfg.m2, grid.dim(), cfg.kernel.kind);
  const auto regions = region_decomposition(res.pair);
  res.stationarity = stationarity_report(res.pair, conv, regions);
  res.diagnostics["tau_final"] = tau;
  res.diagnostics["projection_bisections"] = bisections;
  if (stalled) res.diagnostics["line_search_stalled"] = true;
  const double prefactor = c.c11 + c.c22 + 2.0;
  if (std::abs(prefactor) <= 1e-12) {
    res.diagnostics["second_variation_prefactor"] = prefactor;
    res.diagnostics["flat_direction"] =
        "c11 + c22 = -2: the energy is flat along mass-neutral exchanges on the mixing "
        "region, so the minimizer is not unique";
  }
  return res;
}

}  // namespace

SolverResult minimize_from(const SolverConfig& config, const PhasePair& start) {
  config.validate();
  if (start.grid() != config.grid) throw SolverError("start pair is on a different grid");
  const Convolver conv(config.grid, config.kernel);
  return run_once(config, conv, start.with_coefficients(config.coefficients),
                  config.seed, 0);
}

SolverResult minimize(const SolverConfig& config) {
  config.validate();
  const Convolver conv(config.grid, config.kernel);
  std::optional<SolverResult> best;
  const int starts = config.effective_starts();
  nlohmann::json energies = nlohmann::json::array();
  for (int s = 0; s < starts; ++s) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(s);
    SolverResult r = run_once(config, conv, initial_pair(config, seed), seed, s);
    energies.push_back(r.I_value);
    const bool r_ok = r.status != SolverStatus::boundary_mass_violation;
    const bool b_ok = best && best->status != SolverStatus::boundary_mass_violation;
    if (!best || (r_ok && !b_ok) || (r_ok == b_ok && r.I_value < best->I_value)) {
      best = std::move(r);
    }
  }
  if (starts > 1) best->diagnostics["start_energies"] = energies;
  return std::move(*best);
}

// ---------------------------------------------------------------------------
// Studies

nlohmann::json SweepRow::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"c11", c11},
          {"c22", c22},
          {"status", status},
          {"regime", regime},
          {"energy", opt(energy)},
          {"l1_to_analytic", opt(l1_to_analytic)},
          {"analytic_energy", opt(analytic_energy)},
          {"mix_mean1", opt(mix_mean1)},
          {"mix_mean2", opt(mix_mean2)},
          {"iterations", iterations},
          {"message", message}};
}

std::vector<SweepRow> sweep(const std::vector<Coefficients>& points,
                            const SolverConfig& base) {
  std::vector<SweepRow> rows;
  for (const auto& c : points) {
    SweepRow row;
    row.c11 = c.c11;
    row.c22 = c.c22;
    try {
      row.regime = to_string(classify_regime(c.c11, c.c22, base.m1, base.m2,
                                             base.grid.dim(), base.kernel.kind)
                                 .label);
      SolverConfig cfg = base;
      cfg.coefficients = c;
      const SolverResult r = minimize(cfg);
      row.status = to_string(r.status);
      row.energy = r.I_value;
      row.iterations = r.iterations;
      if (r.regime.has_closed_form()) {
        const auto a = analytic_minimizer(r.regime, c.c11, c.c22, cfg.m1, cfg.m2, cfg.grid);
        row.l1_to_analytic = compare(r.pair, a.pair).l1_distance;
        row.analytic_energy = energy(a.pair, cfg.kernel).total;
      }
      const auto regions = region_decomposition(r.pair);
      const auto mix = intersect(regions.G1, regions.G2);
      if (!mix.empty()) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t k : mix) {
          s1 += r.pair.f1()[k];
          s2 += r.pair.f2()[k];
        }
        row.mix_mean1 = s1 / static_cast<double>(mix.size());
        row.mix_mean2 = s2 / static_cast<double>(mix.size());
      }
    } catch (const InfeasibleError& e) {
      row.status = "infeasible";
      row.message = e.what();
    } catch (const SolverError& e) {
      row.status = "refused";
      row.message = e.what();
    } catch (const std::exception& e) {
      row.status = "error";
      row.message = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

PhasePair tangent_balls(const Grid& grid, double m1, double m2,
                        const Point& axis, Coefficients c) {
  const int dim = grid.dim();
  double norm = 0.0;
  for (int a = 0; a < dim; ++a) norm += axis[a] * axis[a];
  norm = std::sqrt(norm);
  Point u{1.0, 0.0, 0.0};
  if (norm > 0.0) {
    for (int a = 0; a < 3; ++a) u[a] = a < dim ? axis[a] / norm : 0.0;
  }
  const double r1 = ball_radius(m1, dim), r2 = ball_radius(m2, dim);
  Point c1{0.0, 0.0, 0.0}, c2{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    c1[a] = -r1 * u[a];
    c2[a] = r2 * u[a];
  }
  auto a = ball_coverage(grid, c1, m1);
  auto b = ball_coverage(grid, c2, m2);
  // Cut cells at the contact point may overlap slightly; trim phase 2 there.
  for (std::size_t k = 0; k < a.size(); ++k) b[k] = std::min(b[k], 1.0 - a[k]);
  return PhasePair(DensityField(grid, std::move(a)), DensityField(grid, std::move(b)), c);
}

TangentStudy tangent_ball_study(const std::vector<double>& c_list,
                                const SolverConfig& base) {
  if (c_list.empty()) throw SolverError("tangent study needs at least one coefficient");
  for (std::size_t i = 0; i < c_list.size(); ++i) {
    if (!(c_list[i] < -1.0)) {
      throw SolverError("tangent study needs every c < -1 (got " +
                        std::to_string(c_list[i]) + ")");
    }
    if (i > 0 && !(c_list[i] < c_list[i - 1])) {
      throw SolverError("tangent study coefficients must be strictly decreasing");
    }
  }
  TangentStudy study;
  const Grid& grid = base.grid;
  const int dim = grid.dim();
  for (double c : c_list) {
    SolverConfig cfg = base;
    cfg.coefficients = {c, c};
    const SolverResult r = minimize(cfg);
    TangentRow row;
    row.c = c;
    row.status = to_string(r.status);
    row.energy = r.I_value;
    row.iterations = r.iterations;
    std::vector<double> zero(grid.size(), 0.0);
    const Point b1 = barycenter(grid, r.pair.f1().values(), zero);
    const Point b2 = barycenter(grid, zero, r.pair.f2().values());
    Point axis{0.0, 0.0, 0.0};
    double sep = 0.0;
    for (int a = 0; a < dim; ++a) {
      axis[a] = b2[a] - b1[a];
      sep += axis[a] * axis[a];
    }
    row.separation = std::sqrt(sep);
    row.tangent_distance = ball_radius(cfg.m1, dim) + ball_radius(cfg.m2, dim);
    const auto ref = tangent_balls(grid, cfg.m1, cfg.m2, axis, cfg.coefficients);
    row.l1_to_tangent = compare(r.pair, ref).l1_distance;
    study.rows.push_back(row);
  }
  const double floor = 1e-3 * (base.m1 + base.m2);
  for (std::size_t i = 1; i < study.rows.size(); ++i) {
    if (study.rows[i].l1_to_tangent > 1.1 * study.rows[i - 1].l1_to_tangent + floor) {
      study.non_increasing = false;
    }
  }
  return study;
}

}  // namespace twophase
