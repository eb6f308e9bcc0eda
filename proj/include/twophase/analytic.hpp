#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "twophase/field.hpp"
#include "twophase/kernel.hpp"

namespace twophase {

class AnalyticError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Regime labels. The digit pairs name the phase of the ball first:
/// ball_annulus_21 has a ball of phase 2 inside an annulus of phase 1.
enum class RegimeLabel {
  mixed_ball_balanced,
  coulomb_mixed_core_annulus_i,
  coulomb_mixed_core_annulus_ii,
  degenerate_equal_minus_one,
  nested_free_ball_12,
  nested_free_ball_21,
  ball_annulus_12,
  ball_annulus_21,
  tangent_intervals_1d,
  open_segregated,
  unknown,
};

std::string to_string(RegimeLabel label);
RegimeLabel parse_regime_label(const std::string& s);

struct Regime {
  RegimeLabel label = RegimeLabel::unknown;
  std::vector<std::string> witnesses;

  bool has_closed_form() const {
    return label != RegimeLabel::open_segregated && label != RegimeLabel::unknown;
  }
};

/// (a1, a2) = ((c22+1), (c11+1)) / (c11+c22+2).
std::pair<double, double> mixing_fractions(double c11, double c22);

/// Relative tolerance of the mass balance (c11+1) m1 = (c22+1) m2.
inline constexpr double kBalanceTolerance = 1e-9;

/// Case analysis of the phase diagram. Kernel-independent statements apply
/// for c11 + c22 <= -2 and in 1D for c11, c22 < -1; the weakly attractive
/// shapes are claimed for the Coulomb kernel only.
Regime classify_regime(double c11, double c22, double m1, double m2, int dim,
                       KernelKind kernel);

struct RadialPiece {
  Point center{0.0, 0.0, 0.0};
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  double phase1_density = 0.0;
  double phase2_density = 0.0;
};

struct AnalyticMinimizer {
  std::vector<RadialPiece> pieces;
  std::string free_parameters;
  nlohmann::json to_json() const;
};

struct AnalyticResult {
  PhasePair pair;
  AnalyticMinimizer description;
};

/// Rasterized closed-form minimizer centered at the origin; representatives
/// are used for the non-unique regimes (concentric nesting, radially mixed
/// degenerate ball).
AnalyticResult analytic_minimizer(const Regime& regime, double c11, double c22,
                                  double m1, double m2, const Grid& grid);

/// Random admissible pair at (-1,-1) with f1 + f2 equal to the coverage of
/// the centered ball of volume m1 + m2.
PhasePair degenerate_family_sample(std::uint64_t seed, double m1, double m2,
                                   const Grid& grid);

/// (mass / omega_dim)^(1/dim).
double ball_radius(double mass, int dim);

}  // namespace twophase
