#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "twophase/field.hpp"
#include "twophase/field_io.hpp"

using namespace twophase;

TEST_CASE("make_field masses") {
  const Grid g1(1, {8, 1, 1}, 0.5, {0, 0, 0});
  CHECK(make_field(g1, [](const Point&) { return 0.0; }).mass() == 0.0);
  CHECK(make_field(g1, [](const Point&) { return 1.0; }).mass() ==
        doctest::Approx(4.0).epsilon(1e-15));

  const Grid g2 = Grid::centered(1, 40, 0.25);
  const auto f = make_field(g2, [](const Point& p) {
    return std::abs(p[0]) < 1.0 ? 1.0 : 0.0;
  });
  CHECK(std::abs(f.mass() - 2.0) <= 0.25);
}

TEST_CASE("make_field rejects out-of-range values and names the cell") {
  const Grid g(1, {4, 1, 1}, 1.0, {0, 0, 0});
  try {
    make_field(g, [](const Point& p) { return p[0] == 2.0 ? 1.5 : 0.0; });
    FAIL("expected an error");
  } catch (const FieldError& e) {
    CHECK(std::string(e.what()).find("cell 2") != std::string::npos);
  }
}

TEST_CASE("grid geometry") {
  const Grid g(2, {3, 4, 1}, 0.5, {1.0, -1.0, 0.0});
  CHECK(g.size() == 12);
  CHECK(g.cell_volume() == 0.25);
  CHECK(g.capacity() == 3.0);
  const auto c = g.center(g.linear_index({2, 3, 0}));
  CHECK(c[0] == 2.0);
  CHECK(c[1] == 0.5);
  CHECK_THROWS_AS(Grid(4, {1, 1, 1}, 1.0, {}), FieldError);
  CHECK_THROWS_AS(Grid(1, {1, 1, 1}, 0.0, {}), FieldError);
}

TEST_CASE("region decomposition") {
  const Grid g = Grid::centered(2, 40, 0.1);
  const auto half = rasterize_ball(g, {0, 0, 0}, 1.0, 0.5);
  const PhasePair mixed(half, half, {0, 0});
  const auto r = region_decomposition(mixed);
  CHECK(r.F1.empty());
  CHECK(r.F2.empty());
  CHECK(r.G1 == r.G2);
  // Fractional boundary cells are mixed but not saturated.
  std::size_t interior = 0;
  for (std::size_t k = 0; k < g.size(); ++k) interior += half[k] == 0.5;
  CHECK(intersect(r.S, r.G1).size() == interior);

  const auto a = make_field(g, [](const Point& p) { return p[0] < -0.5 ? 1.0 : 0.0; });
  const auto b = make_field(g, [](const Point& p) { return p[0] > 0.5 ? 1.0 : 0.0; });
  const auto rs = region_decomposition(PhasePair(a, b, {0, 0}));
  CHECK(rs.G1.empty());
  CHECK(rs.G2.empty());
  CHECK(rs.F1.size() * g.cell_volume() == doctest::Approx(a.mass()));
  CHECK(rs.F2.size() * g.cell_volume() == doctest::Approx(b.mass()));
}

TEST_CASE("region decomposition partitions each phase") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  const Grid g = Grid::centered(2, 12, 0.2);
  std::vector<double> v1(g.size()), v2(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    v1[k] = u(rng) < 0.1 ? 0.0 : u(rng);
    v2[k] = u(rng);
  }
  const PhasePair p(DensityField(g, v1), DensityField(g, v2), {-1, -1});
  const auto r = region_decomposition(p, 0.01);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const bool in_g = std::binary_search(r.G1.begin(), r.G1.end(), k);
    const bool in_f = std::binary_search(r.F1.begin(), r.F1.end(), k);
    CHECK(!(in_g && in_f));
    if (v1[k] > 0.01) CHECK((in_g || in_f));
  }
}

TEST_CASE("theorem 00 profile regions") {
  const double m1 = 1.0, m2 = 2.0;
  const Grid g = Grid::centered(2, 64, 1.0 / 16);
  const auto f1 = rasterize_ball(g, {0, 0, 0}, m1, 0.5);
  const auto outer = rasterize_ball(g, {0, 0, 0}, m1 + m2);
  std::vector<double> v2(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v2[k] = std::max(0.0, outer[k] - f1[k]);
  const PhasePair p(f1, DensityField(g, v2), {0, 0}, m1, m2);
  const auto r = region_decomposition(p);
  const auto g1_not_s = r.G1.size() - intersect(r.G1, r.S).size();
  // Only the cut cells of the inner disk may fall outside S.
  CHECK(g1_not_s * g.cell_volume() < 0.1);
  CHECK(!r.F2.empty());
  for (std::size_t k : r.F2) {
    CHECK(f1[k] == 0.0);
  }
}

TEST_CASE("rasterize_ball") {
  const Grid g1 = Grid::centered(1, 64, 0.1);
  const auto seg = rasterize_ball(g1, {0, 0, 0}, 2.0);
  CHECK(seg.mass() == doctest::Approx(2.0).epsilon(1e-12));
  for (std::size_t k = 0; k < g1.size(); ++k) {
    const double x = std::abs(g1.center(k)[0]);
    if (x < 0.9) CHECK(seg[k] == 1.0);
    if (x > 1.1) CHECK(seg[k] == 0.0);
  }

  const Grid g2 = Grid::centered(2, 64, 0.05);
  const auto disk = rasterize_ball(g2, {0.013, -0.02, 0}, std::numbers::pi);
  CHECK(std::abs(disk.mass() - std::numbers::pi) <= 1e-6 * std::numbers::pi);
  const auto wide = rasterize_ball(g2, {0, 0, 0}, std::numbers::pi, 0.5);
  CHECK(std::abs(wide.mass() - std::numbers::pi) <= 1e-6 * std::numbers::pi);
  CHECK(wide.max_value() == 0.5);
  for (std::size_t k = 0; k < g2.size(); ++k) {
    const auto c = g2.center(k);
    if (std::hypot(c[0], c[1]) < std::sqrt(2.0) - 0.05) CHECK(wide[k] == 0.5);
  }

  const Grid g3 = Grid::centered(3, 24, 0.1);
  const double m = 4.0 * std::numbers::pi / 3.0 * 0.5;
  CHECK(std::abs(rasterize_ball(g3, {0.03, 0, 0}, m).mass() - m) <= 1e-6 * m);

  CHECK_THROWS_AS(rasterize_ball(g2, {0, 0, 0}, 100.0), FieldError);
  CHECK_THROWS_AS(rasterize_ball(g2, {1.5, 0, 0}, 1.0), FieldError);
}

TEST_CASE("rasterize_ball mass for small radii") {
  const Grid g = Grid::centered(2, 32, 0.1);
  for (double r : {0.2, 0.27, 0.51}) {
    const double m = std::numbers::pi * r * r;
    CHECK(std::abs(rasterize_ball(g, {0.04, 0.01, 0}, m).mass() - m) <= 1e-6 * m);
  }
}

TEST_CASE("phase pair invariants") {
  const Grid g = Grid::centered(1, 10, 0.1);
  const auto one = make_field(g, [](const Point&) { return 1.0; });
  CHECK_THROWS_AS(PhasePair(one, one, {0, 0}), FieldError);
  const auto z = DensityField::zeros(g);
  CHECK_THROWS_AS(PhasePair(one, z, {0.5, 0}), FieldError);
  CHECK_NOTHROW(PhasePair(one, z, {0.5, 0}, true));
  CHECK_THROWS_AS(PhasePair(one, z, {0, 0}, 1.1, 0.0), FieldError);
  CHECK_NOTHROW(PhasePair(one, z, {0, 0}, 1.0 + 1e-12, 0.0));
  const Grid other = Grid::centered(1, 11, 0.1);
  CHECK_THROWS_AS(PhasePair(one, DensityField::zeros(other), {0, 0}), FieldError);
}

TEST_CASE("shift values") {
  const Grid g = Grid::centered(2, 8, 1.0);
  std::vector<double> v(g.size(), 0.0);
  v[g.linear_index({2, 3, 0})] = 0.7;
  const auto s = shift_values(g, v, {1, -2, 0});
  CHECK(s[g.linear_index({3, 1, 0})] == 0.7);
  const auto back = shift_values(g, s, {-1, 2, 0});
  CHECK(back == v);
  CHECK(boundary_layer_mass(g, shift_values(g, v, {-2, 0, 0})) == 0.7);
}

TEST_CASE("field file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "twophase_field_io";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Grid g(3, {3, 4, 5}, 0.37, {-1.0, 0.25, 3.0});
  std::vector<double> v(g.size());
  for (double& x : v) x = u(rng);
  const DensityField f(g, v);
  write_field(f, dir / "a.df");
  const auto r = read_field(dir / "a.df");
  CHECK(r.grid() == g);
  for (std::size_t k = 0; k < v.size(); ++k) CHECK(r[k] == v[k]);

  auto write_raw = [&](const std::string& header, std::size_t n, double val) {
    std::ofstream out(dir / "b.df", std::ios::binary);
    out << header << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      out.write(reinterpret_cast<const char*>(&val), 8);
    }
  };
  write_raw(R"({"dim":4,"cells":[1,1,1,1],"h":1,"origin":[0,0,0,0]})", 1, 0.5);
  CHECK_THROWS_AS(read_field(dir / "b.df"), FieldError);
  write_raw(R"({"dim":1,"cells":[4],"h":1,"origin":[0]})", 3, 0.5);
  CHECK_THROWS_AS(read_field(dir / "b.df"), FieldError);
  write_raw(R"({"dim":2,"cells":[4],"h":1,"origin":[0,0]})", 4, 0.5);
  CHECK_THROWS_AS(read_field(dir / "b.df"), FieldError);
  write_raw(R"({"dim":1,"cells":[2],"h":1,"origin":[0]})", 2, 1.5);
  CHECK_THROWS_AS(read_field(dir / "b.df"), FieldError);
  write_raw("not json", 0, 0.0);
  CHECK_THROWS_AS(read_field(dir / "b.df"), FieldError);
  std::filesystem::remove_all(dir);
}
