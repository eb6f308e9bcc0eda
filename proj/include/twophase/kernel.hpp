#pragma once

#include <complex>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "twophase/field.hpp"

namespace twophase {

class KernelError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class KernelKind { coulomb, top_hat, tent, gaussian, tabulated };

/// Normalization of the Coulomb kernel for N = 3. `fundamental` solves
/// -Laplace K = delta (1/(4 pi |x|)); `printed` uses 1/((N-2) omega_N |x|).
enum class CoulombConstant { fundamental, printed };

/// Radially symmetric, non-increasing interaction kernel.
struct KernelSpec {
  KernelKind kind = KernelKind::coulomb;
  int coulomb_dim = 1;
  CoulombConstant coulomb_constant = CoulombConstant::fundamental;
  double rho = 1.0;    // top_hat, tent
  double sigma = 1.0;  // gaussian
  std::vector<double> table_radii;
  std::vector<double> table_values;

  static KernelSpec coulomb(int dim,
                            CoulombConstant c = CoulombConstant::fundamental);
  static KernelSpec top_hat(double rho);
  static KernelSpec tent(double rho);
  static KernelSpec gaussian(double sigma);
  /// Samples must start at r = 0, increase strictly and be non-increasing.
  static KernelSpec tabulated(std::vector<double> radii,
                              std::vector<double> values);

  bool singular() const { return kind == KernelKind::coulomb && coulomb_dim >= 2; }
  /// Kernels for which J(phi, phi) > 0 for every phi != 0.
  bool positive_definite() const;
  std::string name() const;
};

/// Two whitespace-separated columns "radius value", one sample per line.
KernelSpec load_tabulated_kernel(const std::filesystem::path& path);

KernelKind parse_kernel_kind(const std::string& s);
std::string to_string(KernelKind kind);

double kernel_value(const KernelSpec& spec, double r);

/// (1/h^N) times the integral of K over the cell centered at the origin.
double central_cell_weight(const KernelSpec& spec, const Grid& grid);

/// Largest slope of the sampled radial kernel profile, central weight
/// included. Used to scale discretization tolerances.
double effective_lipschitz(const KernelSpec& spec, const Grid& grid);

struct PotentialField {
  Grid grid;
  std::vector<double> values;
  double source_mass = 0.0;
};

/// Free-space discrete convolution V[k] = h^N sum_j W[k-j] f[j] on a fixed
/// grid, done by zero padding to twice the extent per axis. Holds FFTW
/// plans and scratch buffers, so one instance must not be shared between
/// threads.
class Convolver {
public:
  Convolver(const Grid& grid, const KernelSpec& spec);
  ~Convolver();
  Convolver(const Convolver&) = delete;
  Convolver& operator=(const Convolver&) = delete;

  const Grid& grid() const { return grid_; }
  const KernelSpec& spec() const { return spec_; }

  void apply(std::span<const double> f, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> f) const;

  /// Spectral norm of the padded circulant operator, h^N max |W^|.
  double operator_norm() const { return operator_norm_; }

  /// Kernel weight for an integer cell offset.
  double weight(const std::array<int, 3>& offset) const;

private:
  struct Plans;

  Grid grid_;
  KernelSpec spec_;
  std::array<int, 3> padded_{1, 1, 1};
  std::size_t padded_size_ = 1;
  std::size_t spectrum_size_ = 1;
  double central_weight_ = 0.0;
  double operator_norm_ = 0.0;
  std::vector<std::complex<double>> kernel_hat_;
  std::unique_ptr<Plans> plans_;
};

PotentialField potential(const DensityField& f, const KernelSpec& spec);
/// O(n^2) summation, used for cross-checking the spectral path.
std::vector<double> potential_direct(const Grid& grid,
                                     std::span<const double> f,
                                     const KernelSpec& spec);

double interaction(const DensityField& f, const DensityField& g,
                   const KernelSpec& spec);

/// h^N sum f * V, summed in index order.
double pairing(const Grid& grid, std::span<const double> f,
               std::span<const double> v);

}  // namespace twophase
