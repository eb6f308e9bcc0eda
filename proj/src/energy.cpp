#include "twophase/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace twophase {

namespace {

std::vector<double> combine(std::span<const double> a, double ca,
                            std::span<const double> b, double cb) {
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = ca * a[k] + cb * b[k];
  return out;
}

RegionStat region_stat(std::span<const double> v,
                       std::span<const std::size_t> cells) {
  RegionStat s;
  s.cells = cells.size();
  if (cells.empty()) return s;
  double sum = 0.0;
  for (std::size_t k : cells) sum += v[k];
  s.mean = sum / static_cast<double>(cells.size());
  double sq = 0.0;
  for (std::size_t k : cells) sq += (v[k] - s.mean) * (v[k] - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(cells.size()));
  return s;
}

std::vector<std::size_t> set_difference(std::span<const std::size_t> a,
                                        std::span<const std::size_t> b) {
  std::vector<std::size_t> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

double relative(double diff, double scale) {
  return std::abs(diff) / std::max(std::abs(scale), 1e-300);
}

}  // namespace

nlohmann::json to_json(const EnergyBreakdown& e) {
  return {{"j11", e.j11}, {"j22", e.j22}, {"j12", e.j12}, {"total", e.total}};
}

EnergyBreakdown energy_from_potentials(const Grid& grid,
                                       std::span<const double> f1,
                                       std::span<const double> f2,
                                       std::span<const double> V1,
                                       std::span<const double> V2,
                                       Coefficients c) {
  EnergyBreakdown e;
  e.j11 = pairing(grid, f1, V1);
  e.j22 = pairing(grid, f2, V2);
  e.j12 = pairing(grid, f1, V2);
  e.total = c.c11 * e.j11 + c.c22 * e.j22 - 2.0 * e.j12;
  return e;
}

EnergyBreakdown evaluate_energy(const Convolver& conv, std::span<const double> f1,
                                std::span<const double> f2, Coefficients c) {
  const auto V1 = conv.apply(f1);
  const auto V2 = conv.apply(f2);
  return energy_from_potentials(conv.grid(), f1, f2, V1, V2, c);
}

EnergyBreakdown energy(const PhasePair& pair, const KernelSpec& spec) {
  const Convolver conv(pair.grid(), spec);
  return evaluate_energy(conv, pair.f1().values(), pair.f2().values(),
                         pair.coefficients());
}

double energy_identity_check(const PhasePair& pair, const KernelSpec& spec) {
  if (pair.c11() != -1.0 || pair.c22() != -1.0) {
    throw EnergyError("energy_identity_check needs c11 = c22 = -1");
  }
  if (pair.m1() <= 0.0 || pair.m2() <= 0.0) {
    throw EnergyError("energy_identity_check needs positive masses");
  }
  const Convolver conv(pair.grid(), spec);
  const auto f1 = pair.f1().values();
  const auto f2 = pair.f2().values();
  const double E = evaluate_energy(conv, f1, f2, pair.coefficients()).total;
  const auto sum = combine(f1, 1.0, f2, 1.0);
  const double J = pairing(pair.grid(), sum, conv.apply(sum));
  return std::abs(E + J);
}

double equalizing_identity_residual(const PhasePair& pair, const KernelSpec& spec) {
  const double c11 = pair.c11(), c22 = pair.c22();
  const double denom = 2.0 + c11 + c22;
  const double det = 2.0 - c11 * c22;
  if (denom == 0.0 || det == 0.0) {
    throw EnergyError("equalizing identity undefined for c11 + c22 = -2");
  }
  const Convolver conv(pair.grid(), spec);
  const auto f1 = pair.f1().values();
  const auto f2 = pair.f2().values();
  const double lhs = evaluate_energy(conv, f1, f2, pair.coefficients()).total;
  const auto h1 = combine(f1, 1.0 + c11 / 2.0, f2, -c22 / 2.0);
  const auto h2 = combine(f1, -c11 / 2.0, f2, 1.0 + c22 / 2.0);
  const double c = c11 * c22 / det;
  const double rhs = det / denom * evaluate_energy(conv, h1, h2, {c, c}).total;
  return relative(lhs - rhs, lhs);
}

double half_split_identity_residual(const PhasePair& pair, const KernelSpec& spec) {
  const double c11 = pair.c11(), c22 = pair.c22();
  const Convolver conv(pair.grid(), spec);
  const Grid& grid = pair.grid();
  const auto f1 = pair.f1().values();
  const auto f2 = pair.f2().values();
  const double lhs = evaluate_energy(conv, f1, f2, pair.coefficients()).total;
  const auto g1 = combine(f1, 0.5, f2, 0.0);
  const auto g2 = combine(f1, 0.5, f2, 1.0);
  const auto s = combine(g1, 1.0, g2, 1.0);
  const double rhs = 4.0 * (c11 + 1.0) * pairing(grid, g1, conv.apply(g1)) +
                     c22 * pairing(grid, s, conv.apply(s)) +
                     2.0 * (1.0 + c22) * evaluate_energy(conv, g1, g2, {0, 0}).total;
  return relative(lhs - rhs, lhs);
}

VariationFields first_variation(const PhasePair& pair, const KernelSpec& spec) {
  const Grid& grid = pair.grid();
  const Convolver conv(grid, spec);
  const double c11 = pair.c11(), c22 = pair.c22();
  VariationFields out;
  out.V1 = {grid, conv.apply(pair.f1().values()), pair.m1()};
  out.V2 = {grid, conv.apply(pair.f2().values()), pair.m2()};
  out.W1 = {grid, combine(out.V1.values, 2.0 * c11, out.V2.values, -2.0), 0.0};
  out.W2 = {grid, combine(out.V2.values, 2.0 * c22, out.V1.values, -2.0), 0.0};

  const auto r = region_decomposition(pair);
  const auto g1_s = set_difference(r.G1, r.S);
  const auto g2_s = set_difference(r.G2, r.S);
  const auto g12 = intersect(r.G1, r.G2);
  if (!g1_s.empty()) {
    out.gamma_candidates["G1\\S"] =
        region_stat(combine(out.V1.values, c11, out.V2.values, -1.0), g1_s);
  }
  if (!g2_s.empty()) {
    out.gamma_candidates["G2\\S"] =
        region_stat(combine(out.V2.values, c22, out.V1.values, -1.0), g2_s);
  }
  if (!g12.empty()) {
    out.gamma_candidates["G1&G2"] = region_stat(
        combine(out.V1.values, c11 + 1.0, out.V2.values, -(c22 + 1.0)), g12);
  }
  return out;
}

SecondVariation second_variation_form(const PhasePair& pair,
                                      std::span<const double> phi,
                                      const KernelSpec& spec) {
  const Grid& grid = pair.grid();
  if (phi.size() != grid.size()) {
    throw EnergyError("perturbation does not match the grid");
  }
  double sum = 0.0, abs_sum = 0.0;
  for (double v : phi) {
    sum += v;
    abs_sum += std::abs(v);
  }
  if (std::abs(sum) > 1e-12 * std::max(abs_sum, 1.0)) {
    throw EnergyError("second variation needs a zero-mass perturbation");
  }
  const auto r = region_decomposition(pair);
  const auto g12 = intersect(r.G1, r.G2);
  std::vector<char> allowed(grid.size(), 0);
  for (std::size_t k : g12) allowed[k] = 1;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (phi[k] != 0.0 && !allowed[k]) {
      throw EnergyError("perturbation is not supported in G1 & G2 (cell " +
                        std::to_string(k) + ")");
    }
  }
  SecondVariation sv;
  sv.prefactor = pair.c11() + pair.c22() + 2.0;
  if (abs_sum > 0.0) {
    const Convolver conv(grid, spec);
    sv.form = pairing(grid, phi, conv.apply(phi));
  }
  sv.value = sv.prefactor * sv.form;
  sv.sign = sv.value > 0.0 ? 1 : (sv.value < 0.0 ? -1 : 0);
  return sv;
}

double StationarityReport::max_deviation() const {
  double m = 0.0;
  for (const auto& r : regions) {
    if (r.applicable) m = std::max(m, r.deviation);
  }
  return m;
}

nlohmann::json StationarityReport::to_json() const {
  nlohmann::json j = twophase::to_json(energy);
  nlohmann::json regs = nlohmann::json::object();
  for (const auto& r : regions) {
    nlohmann::json e = {{"combination", r.combination},
                        {"cells", r.cells},
                        {"applicable", r.applicable}};
    if (r.applicable) {
      e["mean"] = r.mean;
      e["stddev"] = r.stddev;
      e["deviation"] = r.deviation;
    }
    regs[r.region] = std::move(e);
  }
  j["regions"] = std::move(regs);
  j["boundary_mass"] = boundary_mass;
  j["boundary_mass_limit"] = boundary_mass_limit;
  j["boundary_ok"] = boundary_ok();
  return j;
}

StationarityReport stationarity_report(const PhasePair& pair,
                                       const KernelSpec& spec,
                                       const PhaseRegions& regions) {
  const Convolver conv(pair.grid(), spec);
  return stationarity_report(pair, conv, regions);
}

StationarityReport stationarity_report(const PhasePair& pair,
                                       const Convolver& conv,
                                       const PhaseRegions& regions) {
  const Grid& grid = pair.grid();
  const auto f1 = pair.f1().values();
  const auto f2 = pair.f2().values();
  const double c11 = pair.c11(), c22 = pair.c22();
  const auto V1 = conv.apply(f1);
  const auto V2 = conv.apply(f2);

  StationarityReport rep;
  rep.energy = energy_from_potentials(grid, f1, f2, V1, V2, pair.coefficients());

  const auto comb1 = combine(V1, c11, V2, -1.0);
  const auto comb2 = combine(V2, c22, V1, -1.0);
  const auto comb12 = combine(V1, c11 + 1.0, V2, -(c22 + 1.0));
  auto add = [&](const std::string& region, const std::string& combination,
                 const std::vector<double>& v,
                 const std::vector<std::size_t>& cells) {
    RegionDeviation d;
    d.region = region;
    d.combination = combination;
    d.cells = cells.size();
    // A single cell is constant trivially and certifies nothing.
    d.applicable = cells.size() >= 2;
    if (d.applicable) {
      const auto s = region_stat(v, cells);
      d.mean = s.mean;
      d.stddev = s.stddev;
      d.deviation = s.stddev / std::max(std::abs(s.mean), 1e-12);
    }
    rep.regions.push_back(std::move(d));
  };
  add("G1\\S", "c11*V1-V2", comb1, set_difference(regions.G1, regions.S));
  add("G2\\S", "c22*V2-V1", comb2, set_difference(regions.G2, regions.S));
  add("G1&G2", "(c11+1)*V1-(c22+1)*V2", comb12, intersect(regions.G1, regions.G2));

  const auto b1 = interface_band(grid, f1);
  const auto b2 = interface_band(grid, f2);
  add("band1\\band2", "c11*V1-V2", comb1, set_difference(b1, b2));
  add("band2\\band1", "c22*V2-V1", comb2, set_difference(b2, b1));
  add("band1&band2", "(c11+1)*V1-(c22+1)*V2", comb12, intersect(b1, b2));

  std::vector<double> total(f1.size());
  for (std::size_t k = 0; k < total.size(); ++k) total[k] = f1[k] + f2[k];
  rep.boundary_mass = boundary_layer_mass(grid, total);
  rep.boundary_mass_limit = kBoundaryMassFraction * (pair.m1() + pair.m2());
  return rep;
}

DensityField bathtub_fill(const DensityField& f2, double m1, const KernelSpec& spec) {
  const Grid& grid = f2.grid();
  if (m1 < 0.0) throw EnergyError("bathtub_fill needs m1 >= 0");
  const double room = grid.capacity() - f2.mass();
  if (m1 > room * (1.0 + 1e-12)) {
    throw EnergyError("bathtub_fill: mass " + std::to_string(m1) +
                      " exceeds the free capacity " + std::to_string(room));
  }
  if (m1 == 0.0) return DensityField::zeros(grid);
  if (f2.mass() == 0.0) {
    throw EnergyError("bathtub_fill: f2 = 0 gives a constant potential with no "
                      "superlevel ordering");
  }
  const Convolver conv(grid, spec);
  const auto V2 = conv.apply(f2.values());
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return V2[a] > V2[b]; });
  std::vector<double> f1(grid.size(), 0.0);
  double left = m1 / grid.cell_volume();
  for (std::size_t k : order) {
    if (left <= 0.0) break;
    const double room_k = std::max(0.0, 1.0 - f2[k]);
    const double put = std::min(room_k, left);
    f1[k] = put;
    left -= put;
  }
  return DensityField(grid, std::move(f1));
}

}  // namespace twophase
