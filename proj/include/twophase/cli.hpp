#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "twophase/field.hpp"
#include "twophase/solver.hpp"

namespace twophase::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitNotConverged = 4;

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Flat `key = value` text. `#` starts a comment, `[name]` prefixes the
/// following keys with `name.`.
class KeyValueFile {
public:
  static KeyValueFile parse(const std::string& text, const std::string& source = "config");
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  /// Marks the key as consumed.
  std::string take(const std::string& key, const std::string& fallback);
  double take_double(const std::string& key, double fallback);
  int take_int(const std::string& key, int fallback);
  bool take_bool(const std::string& key, bool fallback);
  std::vector<double> take_list(const std::string& key, std::vector<double> fallback);
  /// Throws ConfigError naming the first key nobody consumed.
  void reject_unused() const;

private:
  struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
  };
  std::string source_;
  std::map<std::string, Entry> entries_;
  std::string get(const std::string& key);
};

struct ExperimentConfig {
  SolverConfig solver;
  std::vector<double> sweep_c11;
  std::vector<double> sweep_c22;
  std::vector<double> tangent_c;
  std::filesystem::path output_dir;
};

/// Relative paths are resolved against `base_dir`.
ExperimentConfig parse_experiment(KeyValueFile& kv, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Cell width giving a box of 5 ball radii for the total mass.
double auto_spacing(double total_mass, int dim, int cells);
int default_cells(int dim);

/// CSV `radius,f1,f2` of shell means around the origin, shells of width h.
std::string emit_radial_profile(const PhasePair& pair);

std::string usage();

/// Entry point; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace twophase::cli
