#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../common/test_support.hpp"
#include "twophase/energy.hpp"

using namespace twophase;
using twophase::testing::random_pair;

namespace {

// 1D grid with cell edges on multiples of h, covering [-7, 7].
Grid top_hat_grid() { return Grid::centered(1, 1792, 1.0 / 128.0); }

DensityField interval(const Grid& g, double lo, double hi, double value) {
  return make_field(g, [=](const Point& p) {
    return p[0] > lo && p[0] < hi ? value : 0.0;
  });
}

std::vector<double> minus(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
  return out;
}

}  // namespace

TEST_CASE("top hat counterexample energies") {
  const Grid g = top_hat_grid();
  const auto K = KernelSpec::top_hat(1.0);
  const auto halfA = interval(g, -3.0, 3.0, 0.5);
  const auto B = interval(g, -5.5, 5.5, 1.0);
  const PhasePair mixed(halfA, DensityField(g, minus(B.values(), halfA.values())),
                        {0, 0});
  const double e_mixed = energy(mixed, K).total;
  CHECK(std::abs(e_mixed + 6.5) <= 0.05);

  const double c = 0.75;
  std::vector<double> g1(g.size());
  const auto A1 = interval(g, -c - 3.0, -c, 0.5);
  const auto A2 = interval(g, c, c + 3.0, 0.5);
  for (std::size_t k = 0; k < g.size(); ++k) g1[k] = A1[k] + A2[k];
  const DensityField G1(g, g1);
  const PhasePair split(G1, DensityField(g, minus(B.values(), g1)), {0, 0});
  const double e_split = energy(split, K).total;
  CHECK(std::abs(e_split + 7.0) <= 0.05);
  CHECK(e_split < e_mixed);
}

TEST_CASE("breakdown invariant and separated supports") {
  const Grid g = top_hat_grid();
  const auto K = KernelSpec::top_hat(1.0);
  const PhasePair far(interval(g, -6.0, -4.0, 1.0), interval(g, 4.0, 6.0, 1.0),
                      {0, 0});
  CHECK(std::abs(energy(far, K).total) <= 1e-12);

  const Grid g2 = Grid::centered(2, 24, 0.1);
  const auto p = random_pair(g2, 4, {-0.4, -1.7}, 0.8);
  const auto e = energy(p, KernelSpec::coulomb(2));
  CHECK(std::abs(e.total - (-0.4 * e.j11 - 1.7 * e.j22 - 2.0 * e.j12)) <=
        1e-12 * std::abs(e.total));
}

TEST_CASE("energy identity at (-1,-1)") {
  for (int dim = 1; dim <= 3; ++dim) {
    const Grid g = Grid::centered(dim, dim == 3 ? 12 : 32, 0.1);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto p = random_pair(g, seed, {-1, -1}, 0.5);
      const auto K = KernelSpec::coulomb(dim);
      CHECK(energy_identity_check(p, K) <= 1e-10 * std::abs(energy(p, K).total));
    }
  }
  const Grid g = Grid::centered(1, 64, 0.1);
  const auto A = interval(g, -2.0, 0.0, 1.0);
  const auto B = interval(g, 0.0, 1.5, 1.0);
  const PhasePair disjoint(A, B, {-1, -1});
  const auto K = KernelSpec::coulomb(1);
  std::vector<double> u(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) u[k] = A[k] + B[k];
  const DensityField U(g, u);
  CHECK(energy(disjoint, K).total ==
        doctest::Approx(-interaction(U, U, K)).epsilon(1e-12));

  CHECK_THROWS_AS(energy_identity_check(PhasePair(A, DensityField::zeros(g), {-1, -1}), K),
                  EnergyError);
  CHECK_THROWS_AS(energy_identity_check(PhasePair(A, B, {-1, -0.5}), K), EnergyError);
}

TEST_CASE("first variation algebra") {
  const Grid g = Grid::centered(2, 20, 0.1);
  const auto K = KernelSpec::coulomb(2);
  const auto f = rasterize_ball(g, {0, 0, 0}, 0.3);
  const auto v0 = first_variation(PhasePair(f, DensityField::zeros(g), {0, 0}), K);
  for (double w : v0.W1.values) CHECK(w == 0.0);

  const auto p = random_pair(g, 2, {-1, -1}, 0.6);
  const auto v = first_variation(p, K);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double expect = -2.0 * (v.V1.values[k] + v.V2.values[k]);
    CHECK(v.W1.values[k] == doctest::Approx(expect).epsilon(1e-14));
    CHECK(v.W2.values[k] == doctest::Approx(expect).epsilon(1e-14));
  }
  CHECK(v.gamma_candidates.count("G1&G2") == 1);
}

TEST_CASE("finite differences match the gradient") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> cu(-2.0, 0.0);
  for (int dim = 1; dim <= 2; ++dim) {
    const Grid g = Grid::centered(dim, 24, 0.1);
    const auto K = KernelSpec::coulomb(dim);
    const Convolver conv(g, K);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Coefficients c{cu(rng), cu(rng)};
      const auto p = random_pair(g, 100 + seed, c, 0.8);
      const auto v = first_variation(p, K);
      const auto phi1 = twophase::testing::random_signed(g.size(), seed);
      const auto phi2 = twophase::testing::random_signed(g.size(), seed + 50);
      const double eps = 1e-3;
      std::vector<double> a(g.size()), b(g.size()), a2(g.size()), b2(g.size());
      for (std::size_t k = 0; k < g.size(); ++k) {
        a[k] = p.f1()[k] + eps * phi1[k];
        b[k] = p.f1()[k] - eps * phi1[k];
        a2[k] = p.f2()[k] + eps * phi2[k];
        b2[k] = p.f2()[k] - eps * phi2[k];
      }
      const double fd1 = (evaluate_energy(conv, a, p.f2().values(), c).total -
                          evaluate_energy(conv, b, p.f2().values(), c).total) /
                         (2 * eps);
      const double fd2 = (evaluate_energy(conv, p.f1().values(), a2, c).total -
                          evaluate_energy(conv, p.f1().values(), b2, c).total) /
                         (2 * eps);
      const double an1 = pairing(g, v.W1.values, phi1);
      const double an2 = pairing(g, v.W2.values, phi2);
      CHECK(std::abs(fd1 - an1) <= 1e-8 * std::abs(an1));
      CHECK(std::abs(fd2 - an2) <= 1e-8 * std::abs(an2));

      // E(f1 + t phi, f2) is quadratic with leading coefficient c11 J(phi,phi).
      const double e0 = evaluate_energy(conv, p.f1().values(), p.f2().values(), c).total;
      const double ep = evaluate_energy(conv, a, p.f2().values(), c).total;
      const double em = evaluate_energy(conv, b, p.f2().values(), c).total;
      const double quad = (ep - 2 * e0 + em) / (2 * eps * eps);
      const double expect = c.c11 * pairing(g, phi1, conv.apply(phi1));
      // The second difference loses digits to cancellation.
      CHECK(std::abs(quad - expect) <= 1e-5 * std::abs(expect));
    }
  }
}

TEST_CASE("quadratic coefficient by exact fit") {
  const Grid g = Grid::centered(1, 64, 1.0 / 32);
  const auto K = KernelSpec::coulomb(1);
  const Convolver conv(g, K);
  const Coefficients c{-0.7, -1.2};
  const auto p = random_pair(g, 5, c, 0.7);
  const auto phi = twophase::testing::random_signed(g.size(), 8);
  // Fit E(t) at t = 0, 1, -1 with t large enough that roundoff is small.
  auto E = [&](double t) {
    std::vector<double> a(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) a[k] = p.f1()[k] + t * phi[k];
    return evaluate_energy(conv, a, p.f2().values(), c).total;
  };
  const double quad = (E(1.0) - 2 * E(0.0) + E(-1.0)) / 2.0;
  const double expect = c.c11 * pairing(g, phi, conv.apply(phi));
  CHECK(std::abs(quad - expect) <= 1e-8 * std::abs(expect));
  // A fourth point confirms there is no cubic term.
  const double cubic_check = E(2.0) - 3 * E(1.0) + 3 * E(0.0) - E(-1.0);
  CHECK(std::abs(cubic_check) <= 1e-9 * std::abs(E(2.0)));
}

TEST_CASE("second variation") {
  const Grid g = Grid::centered(3, 12, 0.1);
  const auto K = KernelSpec::coulomb(3);
  const auto half = rasterize_ball(g, {0, 0, 0}, 0.2, 0.5);
  const PhasePair p(half, half, {0, 0});
  std::vector<double> zero(g.size(), 0.0);
  CHECK(second_variation_form(p, zero, K).value == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto r = region_decomposition(p);
  const auto g12 = intersect(r.G1, r.G2);
  REQUIRE(g12.size() > 4);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> phi(g.size(), 0.0);
    double mean = 0.0;
    for (std::size_t k : g12) {
      phi[k] = u(rng);
      mean += phi[k];
    }
    mean /= static_cast<double>(g12.size());
    for (std::size_t k : g12) phi[k] -= mean;
    const auto sv = second_variation_form(p, phi, K);
    CHECK(sv.prefactor == 2.0);
    CHECK(sv.value >= -1e-10);
    const auto flat = second_variation_form(p.with_coefficients({-0.5, -1.5}), phi, K);
    CHECK(flat.prefactor == 0.0);
    CHECK(flat.value == 0.0);
    CHECK(flat.sign == 0);
  }
  std::vector<double> bad(g.size(), 0.0);
  bad[g12.front()] = 1.0;
  CHECK_THROWS_AS(second_variation_form(p, bad, K), EnergyError);
  std::vector<double> outside(g.size(), 0.0);
  outside[0] = 1.0;
  outside[g12.front()] = -1.0;
  CHECK_THROWS_AS(second_variation_form(p, outside, K), EnergyError);
}

TEST_CASE("stationarity of the (0,0) coulomb closed form") {
  const double m1 = 1.0, m2 = 2.0;
  const Grid g = Grid::centered(2, 256, 1.0 / 64);
  const auto f1 = rasterize_ball(g, {0, 0, 0}, m1, 0.5);
  const auto outer = rasterize_ball(g, {0, 0, 0}, m1 + m2);
  const DensityField f2(g, minus(outer.values(), f1.values()));
  const PhasePair p(f1, f2, {0, 0}, m1, m2);
  const auto rep = stationarity_report(p, KernelSpec::coulomb(2), region_decomposition(p));
  bool found = false;
  for (const auto& r : rep.regions) {
    if (r.region == "G1&G2") {
      found = true;
      CHECK(r.applicable);
      CHECK(r.deviation < 0.02);
    }
  }
  CHECK(found);
  CHECK(rep.boundary_ok());
  const auto j = rep.to_json();
  CHECK(j.contains("total"));
  CHECK(j["regions"].contains("G1&G2"));
}

TEST_CASE("stationarity report edge cases") {
  const Grid g = Grid::centered(2, 24, 0.1);
  const auto K = KernelSpec::coulomb(2);
  const auto p = random_pair(g, 9, {-0.5, -0.5}, 0.7);
  const auto rep = stationarity_report(p, K, region_decomposition(p));
  CHECK(rep.regions.size() == 6);

  const auto a = make_field(g, [](const Point& x) { return x[0] < -0.3 && std::abs(x[1]) < 0.5 ? 1.0 : 0.0; });
  const auto b = make_field(g, [](const Point& x) { return x[0] > 0.3 && std::abs(x[1]) < 0.5 ? 1.0 : 0.0; });
  const PhasePair seg(a, b, {-1, -1});
  const auto rs = stationarity_report(seg, K, region_decomposition(seg));
  for (const auto& r : rs.regions) {
    if (r.region == "G1&G2") CHECK(!r.applicable);
  }
  // Mass in the outermost layer trips the monitor.
  const auto edge = make_field(g, [](const Point& x) { return x[0] < -1.1 ? 1.0 : 0.0; });
  const PhasePair touching(edge, DensityField::zeros(g), {0, 0});
  CHECK(!stationarity_report(touching, K, region_decomposition(touching)).boundary_ok());
}

TEST_CASE("bathtub fill") {
  const Grid g = Grid::centered(2, 96, 1.0 / 24);
  const auto K = KernelSpec::coulomb(2);
  const double m1 = 0.8, m2 = 0.6;
  const auto f2 = rasterize_ball(g, {0, 0, 0}, m2);
  const auto f1 = bathtub_fill(f2, m1, K);
  CHECK(f1.mass() == doctest::Approx(m1).epsilon(1e-12));
  const auto outer = rasterize_ball(g, {0, 0, 0}, m1 + m2);
  const auto annulus = minus(outer.values(), f2.values());
  // Shapes agree up to the rasterized boundary layers.
  CHECK(twophase::testing::l1(f1.values(), annulus, g.cell_volume()) < 0.05 * (m1 + m2));

  // Optimal against random competitors at c11 = 0.
  const Convolver conv(g, K);
  const double best = evaluate_energy(conv, f1.values(), f2.values(), {0, -1}).total;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> c(g.size(), 0.0);
    double s = 0.0;
    const double rad = 0.9 + 0.4 * u(rng);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g.squared_distance_from_origin(k) < rad * rad) c[k] = (1.0 - f2[k]) * u(rng);
      s += c[k];
    }
    const double scale = m1 / (s * g.cell_volume());
    REQUIRE(scale <= 1.0);
    for (double& x : c) x *= scale;
    CHECK(best <= evaluate_energy(conv, c, f2.values(), {0, -1}).total);
  }

  CHECK(bathtub_fill(f2, 0.0, K).mass() == 0.0);
  CHECK_THROWS_AS(bathtub_fill(DensityField::zeros(g), 0.5, K), EnergyError);
  CHECK_THROWS_AS(bathtub_fill(f2, g.capacity(), K), EnergyError);
}

TEST_CASE("reparameterization identities") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> weak(-1.0, 0.0);
  std::uniform_real_distribution<double> any(-3.0, 0.0);
  for (int dim = 1; dim <= 3; ++dim) {
    const Grid g = Grid::centered(dim, dim == 3 ? 10 : 24, 0.1);
    const auto K = KernelSpec::coulomb(dim);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto p = random_pair(g, seed * 7 + dim, {weak(rng), weak(rng)}, 0.5);
      CHECK(equalizing_identity_residual(p, K) <= 1e-9);
      const auto q = random_pair(g, seed * 11 + dim, {any(rng), any(rng)}, 0.5);
      CHECK(half_split_identity_residual(q, K) <= 1e-9);
    }
  }
}
