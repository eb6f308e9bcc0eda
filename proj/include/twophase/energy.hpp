#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "twophase/field.hpp"
#include "twophase/kernel.hpp"

namespace twophase {

class EnergyError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct EnergyBreakdown {
  double j11 = 0.0;
  double j22 = 0.0;
  double j12 = 0.0;
  double total = 0.0;
};

nlohmann::json to_json(const EnergyBreakdown& e);

/// Breakdown from precomputed potentials V_i = K * f_i.
EnergyBreakdown energy_from_potentials(const Grid& grid,
                                       std::span<const double> f1,
                                       std::span<const double> f2,
                                       std::span<const double> V1,
                                       std::span<const double> V2,
                                       Coefficients c);

/// Energy of raw grid functions (no admissibility check) with a shared
/// convolver; used by the solver and the identity checks.
EnergyBreakdown evaluate_energy(const Convolver& conv, std::span<const double> f1,
                                std::span<const double> f2, Coefficients c);

EnergyBreakdown energy(const PhasePair& pair, const KernelSpec& spec);

/// |E(f1,f2) + J(f1+f2, f1+f2)| at c11 = c22 = -1.
double energy_identity_check(const PhasePair& pair, const KernelSpec& spec);

/// Relative residual of E^{c11,c22}(f) = ((2-c11 c22)/(2+c11+c22)) E^{c,c}(h)
/// with h1 = (1+c11/2) f1 - (c22/2) f2, h2 = -(c11/2) f1 + (1+c22/2) f2 and
/// c = c11 c22 / (2 - c11 c22).
double equalizing_identity_residual(const PhasePair& pair, const KernelSpec& spec);

/// Relative residual of E^{c11,c22}(f) = 4(c11+1) J(g1,g1)
/// + c22 J(g1+g2, g1+g2) + 2(1+c22) E^{0,0}(g1,g2), g1 = f1/2, g2 = f1/2 + f2.
double half_split_identity_residual(const PhasePair& pair, const KernelSpec& spec);

struct RegionStat {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t cells = 0;
};

struct VariationFields {
  PotentialField V1, V2;
  /// Energy gradients per cell, W1 = 2(c11 V1 - V2), W2 = 2(c22 V2 - V1).
  PotentialField W1, W2;
  /// Keys: "G1\\S" -> c11 V1 - V2, "G2\\S" -> c22 V2 - V1,
  /// "G1&G2" -> (c11+1) V1 - (c22+1) V2. Empty regions are omitted.
  std::map<std::string, RegionStat> gamma_candidates;
};

VariationFields first_variation(const PhasePair& pair, const KernelSpec& spec);

struct SecondVariation {
  double prefactor = 0.0;  // c11 + c22 + 2
  double form = 0.0;       // J(phi, phi)
  double value = 0.0;      // prefactor * form
  int sign = 0;
};

/// phi must have zero mass and live on G1 & G2 of the pair.
SecondVariation second_variation_form(const PhasePair& pair,
                                      std::span<const double> phi,
                                      const KernelSpec& spec);

struct RegionDeviation {
  std::string region;
  std::string combination;
  std::size_t cells = 0;
  double mean = 0.0;
  double stddev = 0.0;
  /// stddev / max(|mean|, 1e-12); meaningless when !applicable.
  double deviation = 0.0;
  bool applicable = false;
};

inline constexpr double kBoundaryMassFraction = 1e-6;

struct StationarityReport {
  EnergyBreakdown energy;
  std::vector<RegionDeviation> regions;
  double boundary_mass = 0.0;
  double boundary_mass_limit = 0.0;

  bool boundary_ok() const { return boundary_mass < boundary_mass_limit; }
  /// Largest deviation over applicable regions (0 if none apply).
  double max_deviation() const;
  nlohmann::json to_json() const;
};

/// Constancy of the stationarity combinations on the mixing regions and on
/// the discrete boundary bands B_i = interface_band(f_i): c11 V1 - V2 on
/// B1 \ B2, c22 V2 - V1 on B2 \ B1, (c11+1) V1 - (c22+1) V2 on B1 & B2.
StationarityReport stationarity_report(const PhasePair& pair,
                                       const KernelSpec& spec,
                                       const PhaseRegions& regions);
StationarityReport stationarity_report(const PhasePair& pair,
                                       const Convolver& conv,
                                       const PhaseRegions& regions);

/// Optimal f1 for fixed f2 when c11 = 0: fill 1 - f2 on the highest
/// superlevels of V2 (ties by ascending cell index) until the mass is m1.
DensityField bathtub_fill(const DensityField& f2, double m1, const KernelSpec& spec);

}  // namespace twophase
