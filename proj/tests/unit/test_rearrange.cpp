#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "../common/test_support.hpp"
#include "twophase/rearrange.hpp"

using namespace twophase;
using twophase::testing::l1;

namespace {

DensityField random_field(const Grid& g, std::uint64_t seed, double radius) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.squared_distance_from_origin(k) <= radius * radius) v[k] = u(rng);
  }
  return DensityField(g, std::move(v));
}

DensityField ball(const Grid& g, Point c, double r) {
  return make_field(g, [=](const Point& p) {
    double d2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) d2 += (p[a] - c[a]) * (p[a] - c[a]);
    return d2 <= r * r ? 1.0 : 0.0;
  });
}

std::vector<double> sorted_desc(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

}  // namespace

TEST_CASE("distance order breaks ties by index") {
  const Grid g = Grid::centered(2, 6, 1.0);
  const auto order = distance_order(g);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const double a = g.squared_distance_from_origin(order[k - 1]);
    const double b = g.squared_distance_from_origin(order[k]);
    CHECK(a <= b);
    if (a == b) CHECK(order[k - 1] < order[k]);
  }
}

TEST_CASE("two disjoint intervals become one centered interval") {
  const Grid g = Grid::centered(1, 128, 1.0 / 16.0);
  const auto f = make_field(g, [](const Point& p) {
    return (p[0] > -3.0 && p[0] < -2.0) || (p[0] > 1.0 && p[0] < 2.0) ? 1.0 : 0.0;
  });
  const auto s = symmetric_decreasing(f);
  const auto target = ball_coverage(g, {0.0, 0.0, 0.0}, 2.0);
  CHECK(l1(s.values(), target, g.cell_volume()) <= g.cell_volume() + 1e-12);
  CHECK(s.mass() == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("radial non-increasing field is a fixed point") {
  for (int dim : {1, 2, 3}) {
    const Grid g = Grid::centered(dim, dim == 3 ? 12 : 24, 0.1);
    const auto f = make_field(g, [](const Point& p) {
      return std::exp(-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
    });
    const auto s = symmetric_decreasing(f);
    CHECK(l1(f.values(), s.values(), g.cell_volume()) <= g.cell_volume());
  }
}

TEST_CASE("rearrangement preserves the value multiset and is idempotent") {
  for (int dim : {1, 2, 3}) {
    const Grid g = Grid::centered(dim, dim == 3 ? 10 : 30, 0.2);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto f = random_field(g, seed * 17 + dim, 1e9);
      const auto s = symmetric_decreasing(f);
      CHECK(sorted_desc(f.values()) == sorted_desc(s.values()));
      CHECK(std::abs(s.mass() - f.mass()) <= 1e-13 * f.mass());
      // Along distance order the values are the globally sorted list.
      const auto order = distance_order(g);
      const auto sorted = sorted_desc(f.values());
      bool match = true;
      for (std::size_t k = 0; k < order.size(); ++k) match = match && s[order[k]] == sorted[k];
      CHECK(match);
      const auto twice = symmetric_decreasing(s);
      CHECK(l1(s.values(), twice.values(), g.cell_volume()) <= g.cell_volume());
      const auto p = radial_profile(g, f.values());
      CHECK(std::is_sorted(p.radii.begin(), p.radii.end()));
      CHECK(std::is_sorted(p.values.rbegin(), p.values.rend()));
    }
  }
}

TEST_CASE("rearrange_values handles signed potentials") {
  const Grid g = Grid::centered(2, 8, 1.0);
  const auto v = twophase::testing::random_signed(g.size(), 3);
  const auto s = rearrange_values(g, v);
  CHECK(sorted_desc(v) == sorted_desc(s));
  CHECK_THROWS_AS(rearrange_values(g, std::vector<double>(3, 0.0)), RearrangeError);
}

TEST_CASE("superlevel transport") {
  const Grid g = Grid::centered(2, 24, 0.125);

  SUBCASE("matching orders give the symmetric rearrangement") {
    const auto f = make_field(g, [](const Point& p) {
      return 1.0 / (1.0 + p[0] * p[0] + p[1] * p[1]);
    });
    std::vector<double> V(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) V[k] = -g.squared_distance_from_origin(k);
    const auto t = superlevel_transport(f, V);
    const auto s = symmetric_decreasing(f);
    CHECK(l1(t.values(), s.values(), g.cell_volume()) <= 1e-15);
  }

  SUBCASE("zero maps to zero") {
    const auto V = twophase::testing::random_signed(g.size(), 4);
    CHECK(superlevel_transport(DensityField::zeros(g), V).mass() == 0.0);
  }

  SUBCASE("level masses match level by level") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto f = random_field(g, seed, 1.2);
      auto V = twophase::testing::random_signed(g.size(), seed + 100);
      // Coarse quantization forces ties.
      for (double& x : V) x = std::round(8.0 * x) / 8.0;
      const auto t = superlevel_transport(f, V);
      const auto vs = rearrange_values(g, V);
      std::map<double, int> levels;
      for (double x : V) levels[x] = 0;
      double worst = 0.0;
      for (const auto& [level, unused] : levels) {
        double a = 0.0, b = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (V[k] > level) a += f[k];
          if (vs[k] > level) b += t[k];
        }
        worst = std::max(worst, std::abs(a - b) * g.cell_volume());
      }
      CHECK(worst <= 1e-12);
      CHECK(sorted_desc(f.values()) == sorted_desc(t.values()));
      CHECK(t.max_value() <= f.max_value());
    }
  }
}

TEST_CASE("check_rearr0") {
  const KernelSpec c1 = KernelSpec::coulomb(1);
  CHECK_THROWS_AS(check_rearr0(DensityField::zeros(Grid::centered(1, 8, 0.1)), c1),
                  RearrangeError);
  const Grid g2 = Grid::centered(2, 48, 1.0 / 16.0);
  const KernelSpec k2 = KernelSpec::coulomb(2);
  CHECK_THROWS_AS(check_rearr0(DensityField::zeros(g2), KernelSpec::gaussian(1.0)),
                  RearrangeError);

  SUBCASE("centered ball") {
    const auto r = check_rearr0(ball(g2, {0, 0, 0}, 0.8), k2);
    CHECK(r.ok());
    CHECK(std::abs(r.min_gap) <= r.eps_grid);
  }
  SUBCASE("off-center ball") {
    const auto r = check_rearr0(ball(g2, {0.5, -0.25, 0}, 0.5), k2);
    CHECK(r.ok());
  }
  SUBCASE("two disjoint balls") {
    const auto f = make_field(g2, [](const Point& p) {
      const double a = (p[0] - 0.8) * (p[0] - 0.8) + p[1] * p[1];
      const double b = (p[0] + 0.8) * (p[0] + 0.8) + p[1] * p[1];
      return a <= 0.25 || b <= 0.25 ? 1.0 : 0.0;
    });
    const auto r = check_rearr0(f, k2);
    CHECK(r.ok());
    CHECK(r.mean_gap > 0.0);
  }
  SUBCASE("random fields in 2D and 3D") {
    const Grid g3 = Grid::centered(3, 16, 1.0 / 8.0);
    const KernelSpec k3 = KernelSpec::coulomb(3);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto r2 = check_rearr0(random_field(g2, seed, 1.0), k2);
      const auto r3 = check_rearr0(random_field(g3, seed, 0.7), k3);
      CHECK(r2.ok());
      CHECK(r3.ok());
    }
  }
}

TEST_CASE("riesz gap") {
  SUBCASE("centered radial fields") {
    const Grid g = Grid::centered(2, 40, 0.1);
    const auto f = ball(g, {0, 0, 0}, 0.9);
    const auto gg = make_field(g, [](const Point& p) {
      return std::exp(-2.0 * (p[0] * p[0] + p[1] * p[1]));
    });
    for (const auto& spec : {KernelSpec::coulomb(2), KernelSpec::gaussian(0.5), KernelSpec::tent(1.0)}) {
      const auto r = riesz_gap(f, gg, spec);
      CHECK(std::abs(r.gap) <= r.eps_grid);
    }
  }
  SUBCASE("separated intervals with the top hat") {
    const Grid g = Grid::centered(1, 256, 1.0 / 16.0);
    const auto f = make_field(g, [](const Point& p) {
      return (p[0] > -7.0 && p[0] < -6.0) || (p[0] > 6.0 && p[0] < 7.0) ? 1.0 : 0.0;
    });
    const auto r = riesz_gap(f, f, KernelSpec::top_hat(1.0));
    // Continuum value: 3 for the merged interval minus 2 for the pieces.
    CHECK(r.gap > 0.0);
    CHECK(r.gap == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("random pairs") {
    const Grid g = Grid::centered(2, 32, 0.1);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto f = random_field(g, 2 * seed, 1.4);
      const auto h = random_field(g, 2 * seed + 1, 1.4);
      for (const auto& spec : {KernelSpec::coulomb(2), KernelSpec::gaussian(0.4), KernelSpec::top_hat(0.5)}) {
        CHECK(riesz_gap(f, h, spec).ok());
      }
    }
  }
}

TEST_CASE("improved riesz gap") {
  const Grid g2 = Grid::centered(2, 40, 0.1);
  const KernelSpec k2 = KernelSpec::coulomb(2);

  SUBCASE("identical centered balls") {
    const auto b = ball(g2, {0, 0, 0}, 1.0);
    const auto r = improved_riesz_gap(b, b, k2);
    CHECK(std::abs(r.gap) <= r.eps_grid);
  }
  SUBCASE("small off-center ball in a large centered ball") {
    const auto r = improved_riesz_gap(ball(g2, {0.6, 0.3, 0}, 0.4), ball(g2, {0, 0, 0}, 1.5), k2);
    CHECK(r.ok());
  }
  SUBCASE("inclusion violated") {
    CHECK_THROWS_AS(improved_riesz_gap(ball(g2, {1.0, 0, 0}, 0.5), ball(g2, {0, 0, 0}, 0.5), k2),
                    RearrangeError);
    CHECK_THROWS_AS(improved_riesz_gap(ball(g2, {0, 0, 0}, 0.5), ball(g2, {0, 0, 0}, 1.0),
                                       KernelSpec::tent(1.0)),
                    RearrangeError);
  }
  SUBCASE("random nested masks") {
    const Grid g3 = Grid::centered(3, 14, 0.125);
    const KernelSpec k3 = KernelSpec::coulomb(3);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      for (const auto* gp : {&g2, &g3}) {
        const Grid& g = *gp;
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> a(g.size(), 0.0), b(g.size(), 0.0);
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (g.squared_distance_from_origin(k) > 0.64) continue;
          b[k] = u(rng) < 0.6 ? 1.0 : 0.0;
          a[k] = b[k] > 0.0 && u(rng) < 0.5 ? 1.0 : 0.0;
        }
        const auto r = improved_riesz_gap(DensityField(g, a), DensityField(g, b),
                                          g.dim() == 2 ? k2 : k3);
        CHECK(r.ok());
      }
    }
  }
}
