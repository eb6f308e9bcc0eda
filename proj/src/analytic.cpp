#include "twophase/analytic.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace twophase {

namespace {

constexpr std::pair<RegimeLabel, const char*> kLabels[] = {
    {RegimeLabel::mixed_ball_balanced, "mixed_ball_balanced"},
    {RegimeLabel::coulomb_mixed_core_annulus_i, "coulomb_mixed_core_annulus_i"},
    {RegimeLabel::coulomb_mixed_core_annulus_ii, "coulomb_mixed_core_annulus_ii"},
    {RegimeLabel::degenerate_equal_minus_one, "degenerate_equal_minus_one"},
    {RegimeLabel::nested_free_ball_12, "nested_free_ball_12"},
    {RegimeLabel::nested_free_ball_21, "nested_free_ball_21"},
    {RegimeLabel::ball_annulus_12, "ball_annulus_12"},
    {RegimeLabel::ball_annulus_21, "ball_annulus_21"},
    {RegimeLabel::tangent_intervals_1d, "tangent_intervals_1d"},
    {RegimeLabel::open_segregated, "open_segregated"},
    {RegimeLabel::unknown, "unknown"},
};

std::string fmt(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

bool kernel_positive_definite(KernelKind kind, int dim) {
  return (kind == KernelKind::coulomb && dim >= 3) || kind == KernelKind::gaussian;
}

// Ball of phase `inner` nested in the ball of volume m1 + m2, the
// remainder going to the other phase.
AnalyticResult ball_in_annulus(int inner, double m1, double m2, double c11,
                               double c22, const Grid& grid,
                               std::string free_parameters) {
  const Point o{0.0, 0.0, 0.0};
  const double m_in = inner == 1 ? m1 : m2;
  auto [in, out] = nested_ball_coverage(grid, o, m_in, o, m1 + m2);
  std::vector<double> ring(grid.size());
  for (std::size_t k = 0; k < ring.size(); ++k) ring[k] = out[k] - in[k];
  DensityField ball(grid, std::move(in));
  DensityField annulus(grid, std::move(ring));
  const double r_in = ball_radius(m_in, grid.dim());
  const double r_out = ball_radius(m1 + m2, grid.dim());
  AnalyticMinimizer d;
  d.pieces.push_back({o, 0.0, r_in, inner == 1 ? 1.0 : 0.0, inner == 1 ? 0.0 : 1.0});
  d.pieces.push_back({o, r_in, r_out, inner == 1 ? 0.0 : 1.0, inner == 1 ? 1.0 : 0.0});
  d.free_parameters = std::move(free_parameters);
  if (inner == 1) {
    return {PhasePair(std::move(ball), std::move(annulus), {c11, c22}, m1, m2), d};
  }
  return {PhasePair(std::move(annulus), std::move(ball), {c11, c22}, m1, m2), d};
}

// Phase `core` mixed at fraction a on a ball of volume m_core / a, the
// other phase filling the rest of the ball of volume m1 + m2.
AnalyticResult mixed_core(int core, double a, double m1, double m2, double c11,
                          double c22, const Grid& grid) {
  const Point o{0.0, 0.0, 0.0};
  const double m_core = core == 1 ? m1 : m2;
  const double v_core = std::min(m_core / a, m1 + m2);
  auto [in, out] = nested_ball_coverage(grid, o, v_core, o, m1 + m2);
  // Density a on the core; volume v_core is exact, so the mass is a v_core.
  std::vector<double> fc(grid.size()), fo(grid.size());
  const double scale = m_core / v_core;
  for (std::size_t k = 0; k < fc.size(); ++k) {
    fc[k] = scale * in[k];
    fo[k] = std::max(0.0, out[k] - fc[k]);
  }
  const double r_in = ball_radius(v_core, grid.dim());
  const double r_out = ball_radius(m1 + m2, grid.dim());
  AnalyticMinimizer d;
  const double other = 1.0 - scale;
  if (core == 1) {
    d.pieces.push_back({o, 0.0, r_in, scale, other});
    d.pieces.push_back({o, r_in, r_out, 0.0, 1.0});
  } else {
    d.pieces.push_back({o, 0.0, r_in, other, scale});
    d.pieces.push_back({o, r_in, r_out, 1.0, 0.0});
  }
  d.free_parameters = "translation";
  DensityField a_core(grid, std::move(fc));
  DensityField b_rest(grid, std::move(fo));
  if (core == 1) {
    return {PhasePair(std::move(a_core), std::move(b_rest), {c11, c22}, m1, m2), d};
  }
  return {PhasePair(std::move(b_rest), std::move(a_core), {c11, c22}, m1, m2), d};
}

}  // namespace

std::string to_string(RegimeLabel label) {
  for (const auto& [l, name] : kLabels) {
    if (l == label) return name;
  }
  return "unknown";
}

RegimeLabel parse_regime_label(const std::string& s) {
  for (const auto& [l, name] : kLabels) {
    if (s == name) return l;
  }
  throw AnalyticError("unknown regime label '" + s + "'");
}

std::pair<double, double> mixing_fractions(double c11, double c22) {
  const double s = c11 + c22 + 2.0;
  if (!(s > 0.0)) {
    throw AnalyticError("mixing fractions need c11 + c22 > -2 (got " +
                        fmt(c11 + c22) + ")");
  }
  return {(c22 + 1.0) / s, (c11 + 1.0) / s};
}

double ball_radius(double mass, int dim) {
  if (!(mass > 0.0)) throw AnalyticError("ball_radius needs a positive mass");
  return std::pow(mass / unit_ball_volume(dim), 1.0 / dim);
}

Regime classify_regime(double c11, double c22, double m1, double m2, int dim,
                       KernelKind kernel) {
  Regime r;
  auto& w = r.witnesses;
  auto done = [&](RegimeLabel l) {
    r.label = l;
    return r;
  };
  if (c11 > 0.0 || c22 > 0.0) {
    w.push_back("positive self-interaction coefficient");
    return done(RegimeLabel::unknown);
  }
  if (c11 == -1.0 && c22 == -1.0) {
    w.push_back("c11 = c22 = -1");
    return done(RegimeLabel::degenerate_equal_minus_one);
  }
  const double sum = c11 + c22;
  const bool coulomb = kernel == KernelKind::coulomb;
  if (sum <= -2.0) {
    w.push_back("c11 + c22 = " + fmt(sum) + " <= -2");
    if (c11 == -1.0) {
      w.push_back("c11 = -1, c22 < -1");
      return done(RegimeLabel::nested_free_ball_21);
    }
    if (c22 == -1.0) {
      w.push_back("c22 = -1, c11 < -1");
      return done(RegimeLabel::nested_free_ball_12);
    }
    if (c22 < -1.0 && c11 > -1.0) {
      w.push_back("c22 < -1 < c11 <= 0");
      return done(RegimeLabel::ball_annulus_21);
    }
    if (c11 < -1.0 && c22 > -1.0) {
      w.push_back("c11 < -1 < c22 <= 0");
      return done(RegimeLabel::ball_annulus_12);
    }
    w.push_back("c11, c22 < -1");
    if (dim == 1) {
      w.push_back("dim = 1");
      return done(RegimeLabel::tangent_intervals_1d);
    }
    w.push_back("dim >= 2");
    return done(RegimeLabel::open_segregated);
  }

  w.push_back("c11 + c22 = " + fmt(sum) + " > -2");
  if (c11 <= -1.0 || c22 <= -1.0) {
    if (!coulomb) {
      w.push_back("ball/annulus shape with c11 + c22 > -2 is proven for the "
                  "coulomb kernel only");
      return done(RegimeLabel::unknown);
    }
    w.push_back("kernel is coulomb");
    if (c22 <= -1.0) {
      w.push_back("c22 <= -1 <= c11 <= 0");
      return done(RegimeLabel::ball_annulus_21);
    }
    w.push_back("c11 <= -1 <= c22 <= 0");
    return done(RegimeLabel::ball_annulus_12);
  }

  w.push_back("-1 < c11, c22 <= 0");
  const double s1 = (c11 + 1.0) * m1;
  const double s2 = (c22 + 1.0) * m2;
  const bool balanced =
      std::abs(s1 - s2) <= kBalanceTolerance * std::max(std::abs(s1), std::abs(s2));
  if (balanced && kernel_positive_definite(kernel, dim)) {
    w.push_back("(c11+1) m1 = (c22+1) m2 within " + fmt(kBalanceTolerance));
    w.push_back("kernel is positive definite");
    return done(RegimeLabel::mixed_ball_balanced);
  }
  if (!coulomb) {
    w.push_back(balanced ? "kernel is not flagged positive definite"
                         : "mixed core/annulus shape is proven for the coulomb "
                           "kernel only");
    return done(RegimeLabel::unknown);
  }
  w.push_back("kernel is coulomb");
  if (balanced) {
    w.push_back("(c11+1) m1 = (c22+1) m2 within " + fmt(kBalanceTolerance));
    // The 1D statement and the (0,0) statement both include equality.
    if (dim == 1 || (c11 == 0.0 && c22 == 0.0)) {
      w.push_back(dim == 1 ? "dim = 1 (non-strict inequality)"
                           : "c11 = c22 = 0 with m2 >= m1");
      return done(RegimeLabel::coulomb_mixed_core_annulus_i);
    }
    w.push_back("balanced case without positive definiteness");
    return done(RegimeLabel::unknown);
  }
  if (s2 > s1) {
    w.push_back("(c22+1) m2 > (c11+1) m1");
    return done(RegimeLabel::coulomb_mixed_core_annulus_i);
  }
  w.push_back("(c11+1) m1 > (c22+1) m2");
  return done(RegimeLabel::coulomb_mixed_core_annulus_ii);
}

nlohmann::json AnalyticMinimizer::to_json() const {
  nlohmann::json ps = nlohmann::json::array();
  for (const auto& p : pieces) {
    ps.push_back({{"center", {p.center[0], p.center[1], p.center[2]}},
                  {"inner_radius", p.inner_radius},
                  {"outer_radius", p.outer_radius},
                  {"phase1_density", p.phase1_density},
                  {"phase2_density", p.phase2_density}});
  }
  return {{"pieces", ps}, {"free_parameters", free_parameters}};
}

AnalyticResult analytic_minimizer(const Regime& regime, double c11, double c22,
                                  double m1, double m2, const Grid& grid) {
  if (!(m1 > 0.0) || !(m2 > 0.0)) {
    throw AnalyticError("analytic minimizer needs positive masses");
  }
  const Point o{0.0, 0.0, 0.0};
  switch (regime.label) {
    case RegimeLabel::mixed_ball_balanced:
    case RegimeLabel::degenerate_equal_minus_one: {
      const double m = m1 + m2;
      const auto cov = ball_coverage(grid, o, m);
      std::vector<double> a(grid.size()), b(grid.size());
      for (std::size_t k = 0; k < cov.size(); ++k) {
        a[k] = cov[k] * (m1 / m);
        b[k] = cov[k] * (m2 / m);
      }
      AnalyticMinimizer d;
      d.pieces.push_back({o, 0.0, ball_radius(m, grid.dim()), m1 / m, m2 / m});
      d.free_parameters =
          regime.label == RegimeLabel::degenerate_equal_minus_one
              ? "full degeneracy: any split with f1 + f2 = indicator of the "
                "ball; translation"
              : "translation";
      return {PhasePair(DensityField(grid, std::move(a)),
                        DensityField(grid, std::move(b)), {c11, c22}, m1, m2),
              d};
    }
    case RegimeLabel::coulomb_mixed_core_annulus_i:
      return mixed_core(1, mixing_fractions(c11, c22).first, m1, m2, c11, c22,
                        grid);
    case RegimeLabel::coulomb_mixed_core_annulus_ii:
      return mixed_core(2, mixing_fractions(c11, c22).second, m1, m2, c11, c22,
                        grid);
    case RegimeLabel::ball_annulus_12:
      return ball_in_annulus(1, m1, m2, c11, c22, grid, "translation");
    case RegimeLabel::ball_annulus_21:
      return ball_in_annulus(2, m1, m2, c11, c22, grid, "translation");
    case RegimeLabel::nested_free_ball_12:
      return ball_in_annulus(1, m1, m2, c11, c22, grid,
                             "inner ball of phase 1 anywhere inside the outer "
                             "ball; translation");
    case RegimeLabel::nested_free_ball_21:
      return ball_in_annulus(2, m1, m2, c11, c22, grid,
                             "inner ball of phase 2 anywhere inside the outer "
                             "ball; translation");
    case RegimeLabel::tangent_intervals_1d: {
      if (grid.dim() != 1) {
        throw AnalyticError("tangent intervals are a 1D regime");
      }
      auto a = ball_coverage(grid, {-0.5 * m1, 0.0, 0.0}, m1);
      auto b = ball_coverage(grid, {0.5 * m2, 0.0, 0.0}, m2);
      AnalyticMinimizer d;
      d.pieces.push_back({{-0.5 * m1, 0.0, 0.0}, 0.0, 0.5 * m1, 1.0, 0.0});
      d.pieces.push_back({{0.5 * m2, 0.0, 0.0}, 0.0, 0.5 * m2, 0.0, 1.0});
      d.free_parameters = "translation; reflection";
      return {PhasePair(DensityField(grid, std::move(a)),
                        DensityField(grid, std::move(b)), {c11, c22}, m1, m2),
              d};
    }
    case RegimeLabel::open_segregated:
    case RegimeLabel::unknown:
      break;
  }
  throw AnalyticError("regime " + to_string(regime.label) +
                      " has no closed form; run the solver instead");
}

PhasePair degenerate_family_sample(std::uint64_t seed, double m1, double m2,
                                   const Grid& grid) {
  if (!(m1 > 0.0) || !(m2 > 0.0)) {
    throw AnalyticError("degenerate family samples need positive masses");
  }
  const auto cov = ball_coverage(grid, {0.0, 0.0, 0.0}, m1 + m2);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(grid.size(), 0.0);
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (cov[k] > 0.0) w[k] = u(rng);
  }
  const double target = m1 / grid.cell_volume();
  auto filled = [&](double s) {
    double t = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) t += std::min(1.0, s * w[k]) * cov[k];
    return t;
  };
  double lo = 0.0, hi = 1.0;
  while (filled(hi) < target) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (filled(mid) < target ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  std::vector<double> a(grid.size()), b(grid.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    a[k] = std::min(1.0, s * w[k]) * cov[k];
    b[k] = cov[k] - a[k];
  }
  return PhasePair(DensityField(grid, std::move(a)), DensityField(grid, std::move(b)),
                   {-1.0, -1.0}, m1, m2);
}

}  // namespace twophase
