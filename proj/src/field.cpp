#include "twophase/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace twophase {

Grid::Grid(int dim, std::array<int, 3> cells, double h, Point origin)
    : dim_(dim), cells_(cells), h_(h), origin_(origin) {
  if (dim < 1 || dim > 3) {
    throw FieldError("grid dimension must be 1, 2 or 3 (got " +
                     std::to_string(dim) + ")");
  }
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw FieldError("grid spacing must be positive and finite");
  }
  size_ = 1;
  for (int a = 0; a < 3; ++a) {
    if (a >= dim) {
      cells_[a] = 1;
      origin_[a] = 0.0;
    }
    if (cells_[a] < 1) {
      throw FieldError("cells_per_axis must be positive");
    }
    size_ *= static_cast<std::size_t>(cells_[a]);
  }
  cell_volume_ = std::pow(h, dim);
}

Grid Grid::centered(int dim, int n, double h) {
  const double o = -0.5 * static_cast<double>(n - 1) * h;
  return Grid(dim, {n, n, n}, h, {o, o, o});
}

std::array<int, 3> Grid::multi_index(std::size_t linear) const {
  std::array<int, 3> idx{0, 0, 0};
  idx[2] = static_cast<int>(linear % cells_[2]);
  linear /= cells_[2];
  idx[1] = static_cast<int>(linear % cells_[1]);
  idx[0] = static_cast<int>(linear / cells_[1]);
  return idx;
}

std::size_t Grid::linear_index(const std::array<int, 3>& idx) const {
  return (static_cast<std::size_t>(idx[0]) * cells_[1] + idx[1]) * cells_[2] +
         idx[2];
}

Point Grid::center(std::size_t linear) const {
  const auto idx = multi_index(linear);
  // The storage order puts axis 0 outermost; coordinate axis a maps to
  // storage axis a.
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) {
    p[a] = origin_[a] + h_ * idx[a];
  }
  return p;
}

double Grid::squared_distance_from_origin(std::size_t linear) const {
  const Point p = center(linear);
  return p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
}

bool Grid::on_boundary_layer(std::size_t linear) const {
  const auto idx = multi_index(linear);
  for (int a = 0; a < dim_; ++a) {
    if (idx[a] == 0 || idx[a] == cells_[a] - 1) return true;
  }
  return false;
}

Point Grid::lower_corner() const {
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) p[a] = origin_[a] - 0.5 * h_;
  return p;
}

Point Grid::upper_corner() const {
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) p[a] = origin_[a] + (cells_[a] - 0.5) * h_;
  return p;
}

bool Grid::operator==(const Grid& other) const {
  return dim_ == other.dim_ && cells_ == other.cells_ && h_ == other.h_ &&
         origin_ == other.origin_;
}

double unit_ball_volume(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
    default: throw FieldError("unsupported dimension");
  }
}

double grid_mass(const Grid& grid, std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

DensityField::DensityField(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw FieldError("field has " + std::to_string(values_.size()) +
                     " values but the grid has " +
                     std::to_string(grid_.size()) + " cells");
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    const double v = values_[k];
    if (!(v >= -kBoundTolerance && v <= 1.0 + kBoundTolerance)) {
      const auto idx = grid_.multi_index(k);
      std::ostringstream msg;
      msg << "density value " << v << " outside [0,1] at cell " << k << " ("
          << idx[0] << "," << idx[1] << "," << idx[2] << ")";
      throw FieldError(msg.str());
    }
  }
  mass_ = grid_mass(grid_, values_);
}

DensityField DensityField::zeros(const Grid& grid) {
  return DensityField(grid, std::vector<double>(grid.size(), 0.0));
}

double DensityField::max_value() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

DensityField make_field(const Grid& grid, const CellGenerator& profile) {
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = profile(grid.center(k));
  return DensityField(grid, std::move(v));
}

PhasePair::PhasePair(DensityField f1, DensityField f2, Coefficients c,
                     bool diagnostic)
    : f1_(std::move(f1)), f2_(std::move(f2)), coeffs_(c) {
  m1_ = f1_.mass();
  m2_ = f2_.mass();
  validate(diagnostic);
}

PhasePair::PhasePair(DensityField f1, DensityField f2, Coefficients c,
                     double m1, double m2, bool diagnostic)
    : f1_(std::move(f1)), f2_(std::move(f2)), coeffs_(c), m1_(m1), m2_(m2) {
  validate(diagnostic);
}

PhasePair PhasePair::with_coefficients(Coefficients c, bool diagnostic) const {
  return PhasePair(f1_, f2_, c, m1_, m2_, diagnostic);
}

void PhasePair::validate(bool diagnostic) const {
  if (f1_.grid() != f2_.grid()) {
    throw FieldError("phase fields live on different grids");
  }
  if (!diagnostic && (coeffs_.c11 > 0.0 || coeffs_.c22 > 0.0)) {
    throw FieldError("self-interaction coefficients must be <= 0");
  }
  const std::array<std::pair<const DensityField*, double>, 2> phases{
      std::pair{&f1_, m1_}, std::pair{&f2_, m2_}};
  for (const auto& [f, m] : phases) {
    if (m < 0.0) throw FieldError("declared mass must be nonnegative");
    if (std::abs(f->mass() - m) > 1e-9 * std::max(m, 1e-300) &&
        !(m == 0.0 && f->mass() == 0.0)) {
      std::ostringstream msg;
      msg << "field mass " << f->mass() << " does not match declared mass "
          << m;
      throw FieldError(msg.str());
    }
  }
  const auto a = f1_.values();
  const auto b = f2_.values();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] + b[k] > 1.0 + kBoundTolerance) {
      throw FieldError("f1 + f2 exceeds 1 at cell " + std::to_string(k));
    }
  }
}

PhaseRegions region_decomposition(const PhasePair& pair, double tol) {
  PhaseRegions r;
  r.mix_tolerance = tol;
  const auto a = pair.f1().values();
  const auto b = pair.f2().values();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] >= 1.0 - tol) {
      r.F1.push_back(k);
    } else if (a[k] > tol) {
      r.G1.push_back(k);
    }
    if (b[k] >= 1.0 - tol) {
      r.F2.push_back(k);
    } else if (b[k] > tol) {
      r.G2.push_back(k);
    }
    if (a[k] + b[k] >= 1.0 - tol) r.S.push_back(k);
  }
  return r;
}

std::vector<std::size_t> intersect(std::span<const std::size_t> a,
                                   std::span<const std::size_t> b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

namespace {

// Nearest and farthest distance from p to the cell around c.
std::pair<double, double> cell_distance_range(const Point& c, const Point& p,
                                              double h, int dim) {
  double near2 = 0.0, far2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    const double d = std::abs(c[a] - p[a]);
    const double lo = std::max(0.0, d - 0.5 * h);
    const double hi = d + 0.5 * h;
    near2 += lo * lo;
    far2 += hi * hi;
  }
  return {std::sqrt(near2), std::sqrt(far2)};
}

}  // namespace

std::vector<double> ball_coverage(const Grid& grid, const Point& center,
                                  double volume) {
  const int dim = grid.dim();
  const double h = grid.h();
  const double radius = std::pow(volume / unit_ball_volume(dim), 1.0 / dim);
  const Point lo = grid.lower_corner();
  const Point hi = grid.upper_corner();
  for (int a = 0; a < dim; ++a) {
    if (center[a] - radius < lo[a] - 1e-12 * h ||
        center[a] + radius > hi[a] + 1e-12 * h) {
      std::ostringstream msg;
      msg << "ball of radius " << radius << " exceeds the grid box on axis "
          << a;
      throw FieldError(msg.str());
    }
  }

  std::vector<double> cov(grid.size(), 0.0);
  if (dim == 1) {
    // Exact interval overlap.
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double c = grid.center(k)[0];
      const double lo1 = std::max(c - 0.5 * h, center[0] - radius);
      const double hi1 = std::min(c + 0.5 * h, center[0] + radius);
      if (c - 0.5 * h >= center[0] - radius && c + 0.5 * h <= center[0] + radius) {
        cov[k] = 1.0;
      } else {
        cov[k] = hi1 > lo1 ? std::min(1.0, (hi1 - lo1) / h) : 0.0;
      }
    }
    return cov;
  }
  std::vector<std::size_t> cut;
  std::vector<double> linear_guess;
  double full = 0.0;
  const int n_sub = dim == 1 ? 3 : (dim == 2 ? 9 : 27);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point c = grid.center(k);
    const auto [near, far] = cell_distance_range(c, center, h, dim);
    if (far <= radius) {
      cov[k] = 1.0;
      full += 1.0;
      continue;
    }
    if (near >= radius) continue;
    int inside = 0;
    for (int s = 0; s < n_sub; ++s) {
      int rem = s;
      double d2 = 0.0;
      for (int a = 0; a < dim; ++a) {
        const int o = rem % 3 - 1;
        rem /= 3;
        const double x = c[a] + o * h / 3.0 - center[a];
        d2 += x * x;
      }
      if (d2 <= radius * radius) ++inside;
    }
    cov[k] = static_cast<double>(inside) / n_sub;
    cut.push_back(k);
    linear_guess.push_back((radius - near) / (far - near));
  }

  // Renormalize cut cells so the covered volume is exact.
  const double target = volume / grid.cell_volume() - full;
  double sum = 0.0;
  for (std::size_t k : cut) sum += cov[k];
  if (sum <= 0.0 && target > 0.0) {
    for (std::size_t i = 0; i < cut.size(); ++i) cov[cut[i]] = linear_guess[i];
  }
  for (int pass = 0; pass < 50; ++pass) {
    double free_sum = 0.0, fixed = 0.0;
    for (std::size_t k : cut) {
      if (cov[k] >= 1.0) {
        fixed += 1.0;
      } else {
        free_sum += cov[k];
      }
    }
    const double want = target - fixed;
    if (free_sum <= 0.0) break;
    const double scale = want / free_sum;
    if (std::abs(scale - 1.0) < 1e-15) break;
    bool saturated = false;
    for (std::size_t k : cut) {
      if (cov[k] >= 1.0) continue;
      cov[k] *= scale;
      if (cov[k] > 1.0) {
        cov[k] = 1.0;
        saturated = true;
      }
      if (cov[k] < 0.0) cov[k] = 0.0;
    }
    if (!saturated) break;
  }
  return cov;
}

std::pair<std::vector<double>, std::vector<double>> nested_ball_coverage(
    const Grid& grid, const Point& inner_center, double inner_volume,
    const Point& outer_center, double outer_volume) {
  auto inner = ball_coverage(grid, inner_center, inner_volume);
  auto outer = ball_coverage(grid, outer_center, outer_volume);
  double excess = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (outer[k] < inner[k]) {
      excess += inner[k] - outer[k];
      outer[k] = inner[k];
    }
  }
  // Give the raised volume back, proportionally, on the cut cells of the
  // outer ball.
  for (int pass = 0; pass < 50 && excess > 1e-15; ++pass) {
    double slack = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (outer[k] < 1.0) slack += outer[k] - inner[k];
    }
    if (slack <= 0.0) break;
    const double frac = std::min(1.0, excess / slack);
    double removed = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double room = outer[k] - inner[k];
      if (outer[k] >= 1.0 || room <= 0.0) continue;
      const double take = frac * room;
      outer[k] -= take;
      removed += take;
    }
    excess -= removed;
  }
  return {std::move(inner), std::move(outer)};
}

DensityField rasterize_ball(const Grid& grid, const Point& center, double mass,
                            double density) {
  if (!(density > 0.0 && density <= 1.0)) {
    throw FieldError("ball density must lie in (0,1]");
  }
  if (!(mass >= 0.0)) throw FieldError("ball mass must be nonnegative");
  if (mass == 0.0) return DensityField::zeros(grid);
  auto cov = ball_coverage(grid, center, mass / density);
  for (double& v : cov) v *= density;
  return DensityField(grid, std::move(cov));
}

std::vector<std::size_t> face_neighbors(const Grid& grid, std::size_t linear) {
  std::vector<std::size_t> out;
  const auto idx = grid.multi_index(linear);
  for (int a = 0; a < grid.dim(); ++a) {
    for (int d : {-1, 1}) {
      auto j = idx;
      j[a] += d;
      if (j[a] < 0 || j[a] >= grid.cells(a)) continue;
      out.push_back(grid.linear_index(j));
    }
  }
  return out;
}

std::vector<std::size_t> interface_band(const Grid& grid,
                                        std::span<const double> f, int width) {
  std::vector<char> in(grid.size(), 0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const bool inside = f[k] >= 0.5;
    for (std::size_t j : face_neighbors(grid, k)) {
      if ((f[j] >= 0.5) != inside) {
        in[k] = 1;
        break;
      }
    }
  }
  for (int w = 0; w < width; ++w) {
    auto next = in;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (!in[k]) continue;
      for (std::size_t j : face_neighbors(grid, k)) next[j] = 1;
    }
    in = std::move(next);
  }
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (in[k]) out.push_back(k);
  }
  return out;
}

double boundary_layer_mass(const Grid& grid, std::span<const double> values) {
  double s = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (grid.on_boundary_layer(k)) s += std::abs(values[k]);
  }
  return s * grid.cell_volume();
}

std::vector<double> shift_values(const Grid& grid,
                                 std::span<const double> values,
                                 const std::array<int, 3>& shift) {
  std::vector<double> out(values.size(), 0.0);
  const auto& n = grid.cells();
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] == 0.0) continue;
    auto idx = grid.multi_index(k);
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
      idx[a] += shift[a];
      if (idx[a] < 0 || idx[a] >= n[a]) inside = false;
    }
    if (inside) out[grid.linear_index(idx)] = values[k];
  }
  return out;
}

}  // namespace twophase
