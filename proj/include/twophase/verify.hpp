#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace twophase {

/// One property evaluation. `pass` is decided by the suite; value and
/// tolerance are reported in the check's own units.
struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool pass() const;
  std::size_t failures() const;
  /// Check closest to its limit (largest value / tolerance), failures first.
  const Check* worst() const;
  nlohmann::json to_json() const;
};

/// Riesz gaps for every kernel kind and dimension, the nested-set
/// inequality, the potential domination test, and rearrangement
/// bookkeeping.
SuiteReport verify_rearrange(std::uint64_t seed = 0);
/// Finite-difference gradients and both reparameterization identities.
SuiteReport verify_identities(std::uint64_t seed = 0);
/// Projection optimality and mass accuracy.
SuiteReport verify_projection(std::uint64_t seed = 0);
/// Spectral convolution against direct summation.
SuiteReport verify_kernel(std::uint64_t seed = 0);

std::vector<std::string> suite_names();
/// Throws std::invalid_argument for unknown names.
SuiteReport run_suite(const std::string& name, std::uint64_t seed = 0);

}  // namespace twophase
