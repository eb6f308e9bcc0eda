#include "twophase/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace twophase {

std::vector<std::size_t> distance_order(const Grid& grid) {
  std::vector<double> d2(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) d2[k] = grid.squared_distance_from_origin(k);
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d2[a] < d2[b]; });
  return order;
}

std::vector<std::size_t> decreasing_order(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

std::vector<double> rearrange_values(const Grid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw RearrangeError("value count does not match the grid");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto order = distance_order(grid);
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < order.size(); ++k) out[order[k]] = sorted[k];
  return out;
}

RadialProfile radial_profile(const Grid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw RearrangeError("value count does not match the grid");
  const auto order = distance_order(grid);
  RadialProfile p;
  p.radii.reserve(order.size());
  p.values.assign(values.begin(), values.end());
  std::sort(p.values.begin(), p.values.end(), std::greater<>());
  for (std::size_t k : order) p.radii.push_back(std::sqrt(grid.squared_distance_from_origin(k)));
  return p;
}

DensityField symmetric_decreasing(const DensityField& f) {
  return DensityField(f.grid(), rearrange_values(f.grid(), f.values()));
}

DensityField superlevel_transport(const DensityField& f, std::span<const double> V) {
  const Grid& grid = f.grid();
  if (V.size() != grid.size()) throw RearrangeError("potential does not match the grid");
  const auto by_v = decreasing_order(V);
  const auto by_r = distance_order(grid);
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t k = 0; k < by_v.size(); ++k) out[by_r[k]] = f[by_v[k]];
  return DensityField(grid, std::move(out));
}

nlohmann::json GapResult::to_json() const {
  return {{"gap", gap}, {"eps_grid", eps_grid}, {"ok", ok()}};
}

nlohmann::json Rearr0Result::to_json() const {
  return {{"min_gap", min_gap}, {"mean_gap", mean_gap}, {"eps_grid", eps_grid}, {"ok", ok()}};
}

namespace {

double max_gradient(const Grid& grid, std::span<const double> v) {
  double g = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t j : face_neighbors(grid, k)) {
      g = std::max(g, std::abs(v[j] - v[k]) / grid.h());
    }
  }
  return g;
}

}  // namespace

Rearr0Result check_rearr0(const DensityField& f, const KernelSpec& spec) {
  const Grid& grid = f.grid();
  if (spec.kind != KernelKind::coulomb || grid.dim() < 2) {
    throw RearrangeError("check_rearr0 needs a coulomb kernel in dimension 2 or 3");
  }
  const Convolver conv(grid, spec);
  const auto V = conv.apply(f.values());
  const auto v_star = rearrange_values(grid, V);
  const auto tilde = superlevel_transport(f, V);
  const auto tilde_v = conv.apply(tilde.values());
  Rearr0Result r;
  r.min_gap = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double gap = tilde_v[k] - v_star[k];
    r.min_gap = std::min(r.min_gap, gap);
    sum += gap;
  }
  r.mean_gap = sum / static_cast<double>(grid.size());
  r.eps_grid = 5.0 * grid.h() * max_gradient(grid, V);
  return r;
}

double riesz_tolerance(double mass_f, double mass_g, const KernelSpec& spec,
                       const Grid& grid) {
  return 5.0 * grid.h() * mass_f * mass_g * effective_lipschitz(spec, grid);
}

GapResult riesz_gap(const DensityField& f, const DensityField& g,
                    const KernelSpec& spec) {
  if (f.grid() != g.grid()) throw RearrangeError("fields live on different grids");
  const Grid& grid = f.grid();
  const Convolver conv(grid, spec);
  const auto fs = rearrange_values(grid, f.values());
  const auto gs = rearrange_values(grid, g.values());
  const double before = pairing(grid, f.values(), conv.apply(g.values()));
  const double after = pairing(grid, fs, conv.apply(gs));
  return {after - before, riesz_tolerance(f.mass(), g.mass(), spec, grid)};
}

GapResult improved_riesz_gap(const DensityField& e1, const DensityField& e2,
                             const KernelSpec& spec) {
  if (e1.grid() != e2.grid()) throw RearrangeError("masks live on different grids");
  if (spec.kind != KernelKind::coulomb) {
    throw RearrangeError("the nested-set inequality is stated for coulomb kernels");
  }
  const Grid& grid = e1.grid();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const bool binary = (e1[k] == 0.0 || e1[k] == 1.0) && (e2[k] == 0.0 || e2[k] == 1.0);
    if (!binary) throw RearrangeError("masks must be 0/1 valued");
    if (e1[k] > e2[k]) {
      throw RearrangeError("E1 is not contained in E2 (cell " + std::to_string(k) + ")");
    }
  }
  const Convolver conv(grid, spec);
  const auto s1 = rearrange_values(grid, e1.values());
  const auto s2 = rearrange_values(grid, e2.values());
  const auto v1 = conv.apply(e1.values());
  const auto v1s = conv.apply(s1);
  const double cross = pairing(grid, s2, v1s) - pairing(grid, e2.values(), v1);
  const double self = pairing(grid, s1, v1s) - pairing(grid, e1.values(), v1);
  const double m1 = e1.mass(), m2 = e2.mass();
  return {cross - 0.5 * self,
          riesz_tolerance(m1, m2, spec, grid) + 0.5 * riesz_tolerance(m1, m1, spec, grid)};
}

}  // namespace twophase
