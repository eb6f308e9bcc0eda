#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "twophase/analytic.hpp"
#include "twophase/energy.hpp"
#include "twophase/field.hpp"
#include "twophase/kernel.hpp"

namespace twophase {

class SolverError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Masses that do not fit into the box.
class InfeasibleError : public SolverError {
public:
  using SolverError::SolverError;
};

/// Relative slack kept free when checking m1 + m2 against the capacity.
inline constexpr double kFeasibilityMargin = 1e-9;

struct Projection {
  DensityField f1;
  DensityField f2;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int iterations = 0;
  bool used_bisection = false;
};

/// Euclidean projection onto {f1, f2 >= 0, f1 + f2 <= 1, h^N sum f_i = m_i}.
/// The multipliers are found by Newton's method on the dual, falling back
/// to nested bisection; `hint` warm-starts them.
Projection project_admissible(std::span<const double> raw1,
                              std::span<const double> raw2, double m1,
                              double m2, const Grid& grid,
                              std::optional<std::pair<double, double>> hint = {});

/// Closest point of the triangle {x, y >= 0, x + y <= 1}.
std::pair<double, double> project_triangle(double x, double y);

enum class StepRule { fixed, backtracking };
enum class InitKind { analytic_regime, random, mixed_ball, from_files };
enum class SolverStatus { converged, max_iters, boundary_mass_violation };

std::string to_string(StepRule r);
std::string to_string(InitKind k);
std::string to_string(SolverStatus s);
InitKind parse_init_kind(const std::string& s);
StepRule parse_step_rule(const std::string& s);

struct SolverConfig {
  Grid grid = Grid::centered(2, 64, 1.0 / 16.0);
  KernelSpec kernel = KernelSpec::coulomb(2);
  Coefficients coefficients;
  double m1 = 1.0;
  double m2 = 1.0;

  int max_iters = 5000;
  double energy_tol = 1e-9;
  double stat_tol = 1e-6;

  StepRule step_rule = StepRule::backtracking;
  /// Step for the fixed rule and initial step for backtracking; 0 picks
  /// 1 / (2 max(|c11|, |c22|, 1) |K|).
  double tau = 0.0;
  double beta = 0.5;
  double armijo = 1e-4;
  /// Try a doubled step after each accepted backtracking step.
  bool grow_step = true;

  InitKind init = InitKind::analytic_regime;
  std::uint64_t seed = 0;
  /// Number of starts; 0 means 5 for random init and 1 otherwise.
  int starts = 0;
  std::filesystem::path init_f1;
  std::filesystem::path init_f2;

  int recenter_every = 50;
  double boundary_mass_fraction = kBoundaryMassFraction;
  /// Rebuild a PhasePair from every iterate, which validates admissibility.
  bool debug_checks = false;

  /// Throws SolverError or InfeasibleError.
  void validate() const;
  int effective_starts() const;
  nlohmann::json to_json() const;
};

struct SolverResult {
  PhasePair pair;
  std::vector<double> energy_trace;
  int iterations = 0;
  SolverStatus status = SolverStatus::max_iters;
  StationarityReport stationarity;
  double I_value = 0.0;
  double stat_norm = 0.0;
  Regime regime;
  std::uint64_t seed = 0;
  int start = 0;
  /// Extra facts, e.g. the flat direction at (-1, -1).
  nlohmann::json diagnostics = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Initial step 1 / (2 max(|c11|, |c22|, 1) |K|).
double default_step(Coefficients c, const Convolver& conv);

/// Smooth random admissible pair built from Gaussian bumps.
PhasePair random_initial_pair(const Grid& grid, double m1, double m2,
                              Coefficients c, std::uint64_t seed);

/// Starting pair for `config` and one seed.
PhasePair initial_pair(const SolverConfig& config, std::uint64_t seed);

/// Closed-form regime used for analytic initialization: the actual one
/// when available, otherwise a nearby regime that has a formula.
Regime nearest_closed_form(double c11, double c22, double m1, double m2,
                           int dim, KernelKind kind);

SolverResult minimize(const SolverConfig& config);
/// One run from a given admissible pair.
SolverResult minimize_from(const SolverConfig& config, const PhasePair& start);

/// Barycenter of f1 + f2.
Point barycenter(const Grid& grid, std::span<const double> f1,
                 std::span<const double> f2);

/// Integer shift bringing the joint barycenter within one cell of the
/// origin. Throws SolverError if the shift would push mass out of the box.
PhasePair center(const PhasePair& pair);

struct Comparison {
  double l1_distance = 0.0;
  std::array<int, 3> best_shift{0, 0, 0};
  bool best_reflection = false;
};

/// min over integer shifts s (and reflection in 1D) of the L1 distance
/// between shift(pair, s) and the reference, both phases summed. Mass
/// shifted out of the box counts as distance.
Comparison compare(const PhasePair& pair, const PhasePair& reference);

struct SweepRow {
  double c11 = 0.0;
  double c22 = 0.0;
  std::string status;
  std::string regime;
  std::optional<double> energy;
  std::optional<double> l1_to_analytic;
  std::optional<double> analytic_energy;
  /// Means of f1 and f2 over G1 & G2, when that region is non-empty.
  std::optional<double> mix_mean1;
  std::optional<double> mix_mean2;
  int iterations = 0;
  std::string message;

  nlohmann::json to_json() const;
};

/// One row per point; failures are recorded as rows.
std::vector<SweepRow> sweep(const std::vector<Coefficients>& points,
                            const SolverConfig& base);

struct TangentRow {
  double c = 0.0;
  std::string status;
  double energy = 0.0;
  double l1_to_tangent = 0.0;
  double separation = 0.0;
  double tangent_distance = 0.0;
  int iterations = 0;
};

struct TangentStudy {
  std::vector<TangentRow> rows;
  /// Each L1 distance stays below 1.1 times the previous one (plus a
  /// 1e-3 (m1 + m2) floor).
  bool non_increasing = true;
};

/// Two tangent balls of masses m1, m2 touching at the origin along `axis`.
PhasePair tangent_balls(const Grid& grid, double m1, double m2,
                        const Point& axis, Coefficients c);

/// Runs minimize at (c, c) for each c of a strictly decreasing list with
/// every c < -1.
TangentStudy tangent_ball_study(const std::vector<double>& c_list,
                                const SolverConfig& base);

}  // namespace twophase
