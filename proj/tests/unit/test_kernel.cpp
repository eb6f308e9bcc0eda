#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "twophase/kernel.hpp"

using namespace twophase;

namespace {

std::vector<KernelSpec> kernels_for(int dim) {
  return {KernelSpec::coulomb(dim), KernelSpec::top_hat(0.35),
          KernelSpec::tent(0.5), KernelSpec::gaussian(0.3),
          KernelSpec::tabulated({0.0, 0.2, 0.6}, {1.0, 0.5, 0.1})};
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("kernel values") {
  CHECK(kernel_value(KernelSpec::coulomb(1), 2.0) == -1.0);
  CHECK(kernel_value(KernelSpec::top_hat(1.0), 0.5) == 1.0);
  CHECK(kernel_value(KernelSpec::top_hat(1.0), 1.0) == 1.0);
  CHECK(kernel_value(KernelSpec::top_hat(1.0), 1.01) == 0.0);
  CHECK(kernel_value(KernelSpec::coulomb(2), 1.0) == 0.0);
  CHECK(kernel_value(KernelSpec::coulomb(3), 2.0) ==
        doctest::Approx(1.0 / (8.0 * std::numbers::pi)));
  CHECK(kernel_value(KernelSpec::coulomb(3, CoulombConstant::printed), 2.0) ==
        doctest::Approx(3.0 / (8.0 * std::numbers::pi)));
  CHECK(kernel_value(KernelSpec::tent(1.0), 0.25) == 0.75);
  const auto tab = KernelSpec::tabulated({0.0, 1.0, 2.0}, {2.0, 1.0, 0.5});
  CHECK(kernel_value(tab, 0.5) == 1.5);
  CHECK(kernel_value(tab, 1.5) == 0.75);
  CHECK(kernel_value(tab, 7.0) == 0.5);
  CHECK_THROWS_AS(kernel_value(KernelSpec::coulomb(2), 0.0), KernelError);
  CHECK_THROWS_AS(kernel_value(KernelSpec::coulomb(3), 0.0), KernelError);
}

TEST_CASE("kernel spec validation") {
  CHECK_THROWS_AS(KernelSpec::tabulated({0.0, 1.0}, {1.0, 2.0}), KernelError);
  CHECK_THROWS_AS(KernelSpec::tabulated({0.0, 0.0}, {1.0, 1.0}), KernelError);
  CHECK_THROWS_AS(KernelSpec::tabulated({0.1, 1.0}, {1.0, 0.0}), KernelError);
  CHECK_THROWS_AS(KernelSpec::top_hat(0.0), KernelError);
  CHECK_THROWS_AS(KernelSpec::gaussian(-1.0), KernelError);
  CHECK_THROWS_AS(KernelSpec::coulomb(4), KernelError);
  CHECK(KernelSpec::coulomb(3).positive_definite());
  CHECK(!KernelSpec::coulomb(2).positive_definite());
  CHECK(KernelSpec::gaussian(1.0).positive_definite());
  CHECK(!KernelSpec::top_hat(1.0).positive_definite());
  CHECK(parse_kernel_kind("tent") == KernelKind::tent);
  CHECK_THROWS_AS(parse_kernel_kind("yukawa"), KernelError);
}

TEST_CASE("tabulated kernel file") {
  const auto path = std::filesystem::temp_directory_path() / "twophase_k.txt";
  {
    std::ofstream out(path);
    out << "# r K\n0 1\n0.5 0.5\n1 0\n";
  }
  const auto k = load_tabulated_kernel(path);
  CHECK(k.table_radii.size() == 3);
  CHECK(kernel_value(k, 0.25) == 0.75);
  {
    std::ofstream out(path);
    out << "0 1\n0.5 2\n";
  }
  CHECK_THROWS_AS(load_tabulated_kernel(path), KernelError);
  std::filesystem::remove(path);
}

TEST_CASE("central cell weights") {
  CHECK(central_cell_weight(KernelSpec::coulomb(1), Grid::centered(1, 4, 1.0)) ==
        doctest::Approx(-0.125).epsilon(1e-15));
  CHECK(central_cell_weight(KernelSpec::top_hat(1.0), Grid::centered(2, 4, 0.5)) ==
        1.0);
  CHECK(central_cell_weight(KernelSpec::top_hat(1.0), Grid::centered(1, 4, 0.5)) ==
        1.0);
  // Reference quadratures at h = 0.1.
  const double w2 = central_cell_weight(KernelSpec::coulomb(2), Grid::centered(2, 4, 0.1));
  CHECK(std::abs(w2 - 0.535359114115719772) <= 1e-8 * 0.535359114115719772);
  const double w3 = central_cell_weight(KernelSpec::coulomb(3), Grid::centered(3, 4, 0.1));
  CHECK(std::abs(w3 - 1.894005387092370500) <= 1e-8 * 1.894005387092370500);
  const double w3p = central_cell_weight(KernelSpec::coulomb(3, CoulombConstant::printed),
                                         Grid::centered(3, 4, 0.1));
  CHECK(w3p == doctest::Approx(3.0 * w3).epsilon(1e-12));

  // A tabulated tent must reproduce the tent, whose cell average is a
  // polynomial integral: rho - (average distance to the center).
  const auto tent = KernelSpec::tent(2.0);
  const auto tab = KernelSpec::tabulated({0.0, 2.0}, {2.0, 0.0});
  for (int dim = 1; dim <= 3; ++dim) {
    const Grid g = Grid::centered(dim, 4, 0.3);
    CHECK(central_cell_weight(tab, g) ==
          doctest::Approx(central_cell_weight(tent, g)).epsilon(1e-12));
  }
  // Mean distance from the center of the unit square: (sqrt2 + asinh 1)/6.
  const double mean_r = (std::sqrt(2.0) + std::asinh(1.0)) / 6.0;
  CHECK(central_cell_weight(tent, Grid::centered(2, 4, 1.0)) ==
        doctest::Approx(2.0 - mean_r).epsilon(1e-12));
  // Small top hat inside a 2D cell: pi rho^2 / h^2.
  CHECK(central_cell_weight(KernelSpec::top_hat(0.2), Grid::centered(2, 4, 1.0)) ==
        doctest::Approx(std::numbers::pi * 0.04).epsilon(1e-10));
  // Gaussian: product of 1D erf averages.
  const double s = 0.4, h = 0.5;
  const double one_d = s * std::sqrt(2.0 * std::numbers::pi) *
                       std::erf(h / (2.0 * s * std::sqrt(2.0))) / h;
  CHECK(central_cell_weight(KernelSpec::gaussian(s), Grid::centered(2, 4, h)) ==
        doctest::Approx(one_d * one_d).epsilon(1e-11));
  CHECK(central_cell_weight(KernelSpec::gaussian(s), Grid::centered(3, 4, h)) ==
        doctest::Approx(one_d * one_d * one_d).epsilon(1e-11));
}

TEST_CASE("coulomb kernel must match grid dimension") {
  CHECK_THROWS_AS(Convolver(Grid::centered(2, 4, 0.1), KernelSpec::coulomb(3)),
                  KernelError);
}

TEST_CASE("potential oracles") {
  const Grid g = Grid::centered(2, 8, 0.25);
  const auto zero = potential(DensityField::zeros(g), KernelSpec::coulomb(2));
  for (double v : zero.values) CHECK(v == 0.0);

  const double h = 0.05;
  const Grid g3 = Grid::centered(3, 21, h);
  std::vector<double> v(g3.size(), 0.0);
  v[g3.linear_index({0, 10, 10})] = 1.0;
  const auto V = potential(DensityField(g3, v), KernelSpec::coulomb(3));
  const double expect = h * h * h * kernel_value(KernelSpec::coulomb(3), 10 * h);
  CHECK(std::abs(V.values[g3.linear_index({10, 10, 10})] - expect) <= 1e-6 * expect);

  const double h1 = 1.0 / 63.0;
  const Grid g1(1, {63, 1, 1}, h1, {0.5 * h1, 0, 0});
  const auto ind = make_field(g1, [](const Point&) { return 1.0; });
  const auto V1 = potential(ind, KernelSpec::coulomb(1));
  CHECK(V1.values[31] == doctest::Approx(-0.125).epsilon(1e-12));
}

TEST_CASE("spectral and direct paths agree") {
  for (int dim = 1; dim <= 3; ++dim) {
    const int n = dim == 3 ? 12 : 32;
    const Grid g = Grid::centered(dim, n, 0.07);
    const auto f = random_values(g.size(), 5 + dim);
    for (const auto& k : kernels_for(dim)) {
      const Convolver conv(g, k);
      const auto a = conv.apply(f);
      const auto b = potential_direct(g, f, k);
      double err = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
      INFO(dim, " ", k.name());
      CHECK(err <= 1e-10 * max_abs(b));
    }
  }
}

TEST_CASE("interaction integrals") {
  const double h = 1.0 / 128.0;
  const Grid g(1, {128, 1, 1}, h, {0.5 * h, 0, 0});
  const auto ind = make_field(g, [](const Point&) { return 1.0; });
  CHECK(std::abs(interaction(ind, ind, KernelSpec::coulomb(1)) + 1.0 / 6.0) <= 0.01);

  const Grid gt = Grid::centered(1, 1024, h);
  const auto A = make_field(gt, [](const Point& p) { return std::abs(p[0]) < 3.0 ? 1.0 : 0.0; });
  CHECK(std::abs(interaction(A, A, KernelSpec::top_hat(1.0)) - 11.0) <= 0.05);
  CHECK(interaction(A, DensityField::zeros(gt), KernelSpec::top_hat(1.0)) == 0.0);
}

TEST_CASE("symmetry and bilinearity") {
  for (int dim = 1; dim <= 3; ++dim) {
    const Grid g = Grid::centered(dim, dim == 3 ? 10 : 24, 0.1);
    const DensityField f(g, random_values(g.size(), 1));
    const DensityField gg(g, random_values(g.size(), 2));
    for (const auto& k : kernels_for(dim)) {
      const double fg = interaction(f, gg, k);
      const double gf = interaction(gg, f, k);
      CHECK(std::abs(fg - gf) <= 1e-10 * std::max(1.0, std::abs(fg)));
      for (double alpha : {0.0, 0.5}) {
        std::vector<double> s(f.values().begin(), f.values().end());
        for (double& x : s) x *= alpha;
        const double sc = interaction(DensityField(g, s), gg, k);
        CHECK(std::abs(sc - alpha * fg) <= 1e-10 * std::max(1.0, std::abs(fg)));
      }
      // alpha = 2 leaves [0,1]; use the raw convolution.
      const Convolver conv(g, k);
      std::vector<double> s(f.values().begin(), f.values().end());
      for (double& x : s) x *= 2.0;
      const double sc = pairing(g, s, conv.apply(gg.values()));
      CHECK(std::abs(sc - 2.0 * fg) <= 1e-10 * std::max(1.0, std::abs(fg)));
    }
  }
}

TEST_CASE("coulomb positive definiteness") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Grid g3 = Grid::centered(3, 10, 0.1);
    const Convolver c3(g3, KernelSpec::coulomb(3));
    std::vector<double> phi(g3.size());
    for (double& x : phi) x = u(rng);
    CHECK(pairing(g3, phi, c3.apply(phi)) >= -1e-10);

    for (int dim = 1; dim <= 2; ++dim) {
      const Grid g = Grid::centered(dim, 24, 0.1);
      const Convolver conv(g, KernelSpec::coulomb(dim));
      std::vector<double> z(g.size());
      double mean = 0.0;
      for (double& x : z) {
        x = u(rng) - 0.5;
        mean += x;
      }
      mean /= static_cast<double>(z.size());
      for (double& x : z) x -= mean;
      CHECK(pairing(g, z, conv.apply(z)) >= -1e-12);
    }
  }
}

TEST_CASE("effective lipschitz") {
  const Grid g = Grid::centered(1, 16, 0.1);
  CHECK(effective_lipschitz(KernelSpec::coulomb(1), g) == doctest::Approx(0.5));
  CHECK(effective_lipschitz(KernelSpec::tent(1.0), g) == doctest::Approx(1.0).epsilon(1e-9));
}
