#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "twophase/field.hpp"
#include "twophase/kernel.hpp"

namespace twophase {

class RearrangeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// One entry per cell in distance order. radii[k] is the center distance
/// of the k-th closest cell, values[k] the value placed there.
struct RadialProfile {
  std::vector<double> radii;
  std::vector<double> values;
};

/// Cells sorted by squared center distance from the origin, ties broken by
/// ascending index.
std::vector<std::size_t> distance_order(const Grid& grid);

/// Cells sorted by decreasing value, ties broken by ascending index.
std::vector<std::size_t> decreasing_order(std::span<const double> values);

/// Values sorted into the distance order, largest innermost. Works for any
/// sign, so it also rearranges potentials.
std::vector<double> rearrange_values(const Grid& grid, std::span<const double> values);
RadialProfile radial_profile(const Grid& grid, std::span<const double> values);

DensityField symmetric_decreasing(const DensityField& f);

/// Moves the value of the k-th cell in decreasing-V order to the k-th cell
/// in distance order.
DensityField superlevel_transport(const DensityField& f, std::span<const double> V);

struct GapResult {
  double gap = 0.0;
  double eps_grid = 0.0;
  bool ok() const { return gap >= -eps_grid; }
  nlohmann::json to_json() const;
};

struct Rearr0Result {
  double min_gap = 0.0;
  double mean_gap = 0.0;
  double eps_grid = 0.0;
  bool ok() const { return min_gap >= -eps_grid; }
  nlohmann::json to_json() const;
};

/// min over cells of potential(superlevel_transport(f, V)) - V*, V = potential(f).
/// eps_grid is 5 h max|grad_h V|.
Rearr0Result check_rearr0(const DensityField& f, const KernelSpec& spec);

/// Tolerance 5 h |f|_1 |g|_1 L with L = effective_lipschitz(spec, grid).
double riesz_tolerance(double mass_f, double mass_g, const KernelSpec& spec,
                       const Grid& grid);

/// interaction(f*, g*) - interaction(f, g).
GapResult riesz_gap(const DensityField& f, const DensityField& g,
                    const KernelSpec& spec);

/// [J(E1*,E2*) - J(E1,E2)] - [J(E1*,E1*) - J(E1,E1)] / 2 for nested 0/1
/// masks E1 within E2.
GapResult improved_riesz_gap(const DensityField& e1, const DensityField& e2,
                             const KernelSpec& spec);

}  // namespace twophase
