#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twophase {

using Point = std::array<double, 3>;

/// Thrown when a field, pair or grid would violate its invariants.
class FieldError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform Cartesian grid of a box in R^dim (dim <= 3). Cells are stored
/// row-major with the last active axis fastest; unused axes have extent 1.
class Grid {
public:
  Grid() = default;
  Grid(int dim, std::array<int, 3> cells, double h, Point origin);

  /// Grid with `n` cells per axis whose cell edges are symmetric about 0.
  static Grid centered(int dim, int n, double h);

  int dim() const { return dim_; }
  int cells(int axis) const { return cells_[axis]; }
  const std::array<int, 3>& cells() const { return cells_; }
  double h() const { return h_; }
  const Point& origin() const { return origin_; }

  std::size_t size() const { return size_; }
  double cell_volume() const { return cell_volume_; }
  double capacity() const { return cell_volume_ * static_cast<double>(size_); }

  std::array<int, 3> multi_index(std::size_t linear) const;
  std::size_t linear_index(const std::array<int, 3>& idx) const;
  Point center(std::size_t linear) const;
  double squared_distance_from_origin(std::size_t linear) const;

  /// True when the cell touches the outermost layer of the box.
  bool on_boundary_layer(std::size_t linear) const;

  /// Lower and upper box corner per axis.
  Point lower_corner() const;
  Point upper_corner() const;

  bool operator==(const Grid& other) const;
  bool operator!=(const Grid& other) const { return !(*this == other); }

private:
  int dim_ = 1;
  std::array<int, 3> cells_{1, 1, 1};
  double h_ = 1.0;
  Point origin_{0.0, 0.0, 0.0};
  std::size_t size_ = 1;
  double cell_volume_ = 1.0;
};

/// Volume of the unit ball in R^dim.
double unit_ball_volume(int dim);

/// Tolerance applied to the pointwise bounds of densities.
inline constexpr double kBoundTolerance = 1e-12;

/// Nonnegative grid function with values in [0,1] and cached mass.
class DensityField {
public:
  DensityField() = default;
  DensityField(Grid grid, std::vector<double> values);

  static DensityField zeros(const Grid& grid);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::size_t size() const { return values_.size(); }
  double mass() const { return mass_; }
  double max_value() const;

private:
  Grid grid_;
  std::vector<double> values_;
  double mass_ = 0.0;
};

/// h^N * sum(values), summed in index order.
double grid_mass(const Grid& grid, std::span<const double> values);

using CellGenerator = std::function<double(const Point&)>;

DensityField make_field(const Grid& grid, const CellGenerator& profile);

/// Self-interaction coefficients (c11, c22). The cross coefficient is fixed
/// so that c12 + c21 = -2.
struct Coefficients {
  double c11 = 0.0;
  double c22 = 0.0;
};

/// Admissible pair (f1, f2) with f1 + f2 <= 1 and declared masses.
class PhasePair {
public:
  PhasePair() = default;
  /// Masses are taken from the fields.
  PhasePair(DensityField f1, DensityField f2, Coefficients c,
            bool diagnostic = false);
  /// Declared masses must match the fields to 1e-9 relative.
  PhasePair(DensityField f1, DensityField f2, Coefficients c, double m1,
            double m2, bool diagnostic = false);

  const DensityField& f1() const { return f1_; }
  const DensityField& f2() const { return f2_; }
  const DensityField& phase(int i) const { return i == 1 ? f1_ : f2_; }
  const Grid& grid() const { return f1_.grid(); }
  Coefficients coefficients() const { return coeffs_; }
  double c11() const { return coeffs_.c11; }
  double c22() const { return coeffs_.c22; }
  double m1() const { return m1_; }
  double m2() const { return m2_; }

  PhasePair with_coefficients(Coefficients c, bool diagnostic = false) const;

private:
  void validate(bool diagnostic) const;

  DensityField f1_;
  DensityField f2_;
  Coefficients coeffs_;
  double m1_ = 0.0;
  double m2_ = 0.0;
};

inline constexpr double kDefaultMixTolerance = 1e-3;

struct PhaseRegions {
  std::vector<std::size_t> G1, G2, F1, F2, S;
  double mix_tolerance = kDefaultMixTolerance;
};

PhaseRegions region_decomposition(const PhasePair& pair,
                                  double mix_tolerance = kDefaultMixTolerance);

/// Sorted intersection of two sorted index sets.
std::vector<std::size_t> intersect(std::span<const std::size_t> a,
                                   std::span<const std::size_t> b);

/// Fraction of each cell covered by the ball of the given volume: exact
/// overlap in 1D, otherwise 3^dim subsamples on cut cells and a boundary renormalization so the
/// covered volume is exact.
std::vector<double> ball_coverage(const Grid& grid, const Point& center,
                                  double volume);

/// Coverages of two balls with inner <= outer cell-wise and both volumes
/// exact. The inner ball must lie inside the outer one.
std::pair<std::vector<double>, std::vector<double>> nested_ball_coverage(
    const Grid& grid, const Point& inner_center, double inner_volume,
    const Point& outer_center, double outer_volume);

DensityField rasterize_ball(const Grid& grid, const Point& center, double mass,
                            double density = 1.0);

/// Face neighbours of a cell inside the box.
std::vector<std::size_t> face_neighbors(const Grid& grid, std::size_t linear);

/// Cells on either side of a jump of the indicator {f >= 1/2} across a cell
/// face, dilated `width` times by face adjacency. A discrete stand-in for a
/// neighbourhood of the phase boundary.
std::vector<std::size_t> interface_band(const Grid& grid,
                                        std::span<const double> f,
                                        int width = 0);

/// Mass sitting in the outermost cell layer of the box.
double boundary_layer_mass(const Grid& grid, std::span<const double> values);

/// Integer-cell translation; cells shifted out of the box are dropped.
std::vector<double> shift_values(const Grid& grid,
                                 std::span<const double> values,
                                 const std::array<int, 3>& shift);

}  // namespace twophase
