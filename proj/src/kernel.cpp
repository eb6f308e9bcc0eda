#include "twophase/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fftw3.h>

namespace twophase {

namespace {

constexpr double kPi = std::numbers::pi;

double coulomb_3d_constant(const KernelSpec& spec) {
  // Only N = 3 is supported; (N-2) omega_N = 4 pi / 3 there.
  return spec.coulomb_constant == CoulombConstant::fundamental
             ? 1.0 / (4.0 * kPi)
             : 3.0 / (4.0 * kPi);
}

// int_0^rho K(r) r^(n-1) dr
double radial_moment(const KernelSpec& spec, int n, double rho) {
  if (rho <= 0.0) return 0.0;
  switch (spec.kind) {
    case KernelKind::coulomb:
      switch (spec.coulomb_dim) {
        case 1: return -rho * rho / 4.0;
        case 2:
          return -(rho * rho * std::log(rho) / 2.0 - rho * rho / 4.0) /
                 (2.0 * kPi);
        default: return coulomb_3d_constant(spec) * rho * rho / 2.0;
      }
    case KernelKind::top_hat: {
      const double s = std::min(rho, spec.rho);
      return std::pow(s, n) / n;
    }
    case KernelKind::tent: {
      const double s = std::min(rho, spec.rho);
      return spec.rho * std::pow(s, n) / n - std::pow(s, n + 1) / (n + 1);
    }
    case KernelKind::gaussian: {
      const double sig = spec.sigma;
      const double e = std::exp(-rho * rho / (2.0 * sig * sig));
      const double erf_term =
          sig * std::sqrt(kPi / 2.0) * std::erf(rho / (sig * std::sqrt(2.0)));
      switch (n) {
        case 1: return erf_term;
        case 2: return sig * sig * (1.0 - e);
        default: return sig * sig * erf_term - sig * sig * rho * e;
      }
    }
    case KernelKind::tabulated: {
      const auto& r = spec.table_radii;
      const auto& v = spec.table_values;
      double total = 0.0;
      for (std::size_t i = 0; i + 1 < r.size() && r[i] < rho; ++i) {
        const double r1 = r[i];
        const double r2 = std::min(r[i + 1], rho);
        const double slope = (v[i + 1] - v[i]) / (r[i + 1] - r[i]);
        const double a = v[i] - slope * r1;
        total += a * (std::pow(r2, n) - std::pow(r1, n)) / n +
                 slope * (std::pow(r2, n + 1) - std::pow(r1, n + 1)) / (n + 1);
      }
      if (rho > r.back()) {
        total += v.back() * (std::pow(rho, n) - std::pow(r.back(), n)) / n;
      }
      return total;
    }
  }
  return 0.0;
}

using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
constexpr double kQuadTol = 1e-12;
constexpr unsigned kQuadDepth = 12;

// Radii where the radial profile has a kink.
std::vector<double> radial_breakpoints(const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::top_hat:
    case KernelKind::tent: return {spec.rho};
    case KernelKind::tabulated: return spec.table_radii;
    default: return {};
  }
}

// Integrates over [lo, hi] split at the given interior points.
template <class F>
double integrate_split(F&& f, double lo, double hi, std::vector<double> cuts) {
  cuts.push_back(lo);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = std::max(lo, cuts[i]);
    const double b = std::min(hi, cuts[i + 1]);
    if (b <= a) continue;
    double err = 0.0;
    total += Quad::integrate(f, a, b, kQuadDepth, kQuadTol, &err);
  }
  return total;
}

}  // namespace

KernelSpec KernelSpec::coulomb(int dim, CoulombConstant c) {
  if (dim < 1 || dim > 3) throw KernelError("coulomb kernel needs N in {1,2,3}");
  KernelSpec s;
  s.kind = KernelKind::coulomb;
  s.coulomb_dim = dim;
  s.coulomb_constant = c;
  return s;
}

KernelSpec KernelSpec::top_hat(double rho) {
  if (!(rho > 0.0)) throw KernelError("top_hat needs rho > 0");
  KernelSpec s;
  s.kind = KernelKind::top_hat;
  s.rho = rho;
  return s;
}

KernelSpec KernelSpec::tent(double rho) {
  if (!(rho > 0.0)) throw KernelError("tent needs rho > 0");
  KernelSpec s;
  s.kind = KernelKind::tent;
  s.rho = rho;
  return s;
}

KernelSpec KernelSpec::gaussian(double sigma) {
  if (!(sigma > 0.0)) throw KernelError("gaussian needs sigma > 0");
  KernelSpec s;
  s.kind = KernelKind::gaussian;
  s.sigma = sigma;
  return s;
}

KernelSpec KernelSpec::tabulated(std::vector<double> radii,
                                 std::vector<double> values) {
  if (radii.size() < 2 || radii.size() != values.size()) {
    throw KernelError("tabulated kernel needs at least two (r, K) samples");
  }
  if (radii.front() != 0.0) {
    throw KernelError("tabulated kernel samples must start at r = 0");
  }
  for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
    if (!(radii[i + 1] > radii[i])) {
      throw KernelError("tabulated radii must increase strictly");
    }
    if (values[i + 1] > values[i]) {
      throw KernelError("tabulated kernel is not non-increasing at r = " +
                        std::to_string(radii[i + 1]));
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw KernelError("tabulated kernel value not finite");
  }
  KernelSpec s;
  s.kind = KernelKind::tabulated;
  s.table_radii = std::move(radii);
  s.table_values = std::move(values);
  return s;
}

bool KernelSpec::positive_definite() const {
  return (kind == KernelKind::coulomb && coulomb_dim >= 3) ||
         kind == KernelKind::gaussian;
}

std::string KernelSpec::name() const {
  std::ostringstream s;
  s << to_string(kind);
  switch (kind) {
    case KernelKind::coulomb: s << "(" << coulomb_dim << ")"; break;
    case KernelKind::top_hat:
    case KernelKind::tent: s << "(" << rho << ")"; break;
    case KernelKind::gaussian: s << "(" << sigma << ")"; break;
    case KernelKind::tabulated: s << "(" << table_radii.size() << " samples)"; break;
  }
  return s.str();
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::coulomb: return "coulomb";
    case KernelKind::top_hat: return "top_hat";
    case KernelKind::tent: return "tent";
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::tabulated: return "tabulated";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(const std::string& s) {
  if (s == "coulomb") return KernelKind::coulomb;
  if (s == "top_hat") return KernelKind::top_hat;
  if (s == "tent") return KernelKind::tent;
  if (s == "gaussian") return KernelKind::gaussian;
  if (s == "tabulated" || s == "tabulated_radial") return KernelKind::tabulated;
  throw KernelError("unknown kernel kind '" + s + "'");
}

KernelSpec load_tabulated_kernel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw KernelError("cannot open kernel table " + path.string());
  std::vector<double> r, v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double a = 0.0, b = 0.0;
    if (!(ls >> a >> b)) throw KernelError("malformed kernel table line: " + line);
    r.push_back(a);
    v.push_back(b);
  }
  return KernelSpec::tabulated(std::move(r), std::move(v));
}

double kernel_value(const KernelSpec& spec, double r) {
  if (r < 0.0) throw KernelError("kernel radius must be nonnegative");
  switch (spec.kind) {
    case KernelKind::coulomb:
      if (spec.coulomb_dim == 1) return -0.5 * r;
      if (r == 0.0) {
        throw KernelError(
            "coulomb kernel is singular at r = 0; use central_cell_weight");
      }
      if (spec.coulomb_dim == 2) return -std::log(r) / (2.0 * kPi);
      return coulomb_3d_constant(spec) / r;
    case KernelKind::top_hat: return r <= spec.rho ? 1.0 : 0.0;
    case KernelKind::tent: return r <= spec.rho ? spec.rho - r : 0.0;
    case KernelKind::gaussian:
      return std::exp(-r * r / (2.0 * spec.sigma * spec.sigma));
    case KernelKind::tabulated: {
      const auto& rr = spec.table_radii;
      const auto& vv = spec.table_values;
      if (r >= rr.back()) return vv.back();
      const auto it = std::upper_bound(rr.begin(), rr.end(), r);
      const std::size_t i = static_cast<std::size_t>(it - rr.begin()) - 1;
      const double t = (r - rr[i]) / (rr[i + 1] - rr[i]);
      return vv[i] + t * (vv[i + 1] - vv[i]);
    }
  }
  return 0.0;
}

double central_cell_weight(const KernelSpec& spec, const Grid& grid) {
  const int n = grid.dim();
  if (spec.kind == KernelKind::coulomb && spec.coulomb_dim != n) {
    throw KernelError("coulomb(" + std::to_string(spec.coulomb_dim) +
                      ") kernel used on a " + std::to_string(n) + "D grid");
  }
  const double h = grid.h();
  const double a = 0.5 * h;
  if (n == 1) {
    if (spec.kind == KernelKind::coulomb) return -h / 8.0;
    if (spec.kind == KernelKind::top_hat) return 2.0 * std::min(a, spec.rho) / h;
    return 2.0 * radial_moment(spec, 1, a) / h;
  }
  if (spec.kind == KernelKind::top_hat && spec.rho >= a * std::sqrt(double(n))) {
    return 1.0;
  }
  const auto breaks = radial_breakpoints(spec);
  if (n == 2) {
    // Eight congruent triangles; polar coordinates about the cell center.
    auto outer = [&](double theta) {
      return radial_moment(spec, 2, a / std::cos(theta));
    };
    std::vector<double> cuts;
    for (double b : breaks) {
      if (b > a) cuts.push_back(std::acos(std::min(1.0, a / b)));
    }
    return 8.0 * integrate_split(outer, 0.0, kPi / 4.0, cuts) / (h * h);
  }
  // 48 congruent cones over the triangles 0 <= z <= y <= a of the faces.
  auto outer = [&](double y) {
    auto inner = [&](double z) {
      const double p = std::sqrt(a * a + y * y + z * z);
      return a / (p * p * p) * radial_moment(spec, 3, p);
    };
    std::vector<double> cuts;
    for (double b : breaks) {
      const double t = b * b - a * a - y * y;
      if (t > 0.0) cuts.push_back(std::sqrt(t));
    }
    return integrate_split(inner, 0.0, y, cuts);
  };
  std::vector<double> cuts;
  for (double b : breaks) {
    const double t = b * b - a * a;
    if (t > 0.0) {
      cuts.push_back(std::sqrt(t));
      cuts.push_back(std::sqrt(t / 2.0));
    }
  }
  return 48.0 * integrate_split(outer, 0.0, a, cuts) / (h * h * h);
}

double effective_lipschitz(const KernelSpec& spec, const Grid& grid) {
  int nmax = 2;
  for (int a = 0; a < grid.dim(); ++a) nmax = std::max(nmax, grid.cells(a));
  const double h = grid.h();
  double prev = central_cell_weight(spec, grid);
  double lip = 0.0;
  for (int k = 1; k < nmax; ++k) {
    const double cur = kernel_value(spec, k * h);
    lip = std::max(lip, std::abs(prev - cur) / h);
    prev = cur;
  }
  return lip;
}

struct Convolver::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;
};

Convolver::Convolver(const Grid& grid, const KernelSpec& spec)
    : grid_(grid), spec_(spec), plans_(std::make_unique<Plans>()) {
  const int n = grid.dim();
  central_weight_ = central_cell_weight(spec, grid);

  padded_size_ = 1;
  for (int a = 0; a < 3; ++a) {
    padded_[a] = a < n ? 2 * grid.cells(a) : 1;
    padded_size_ *= static_cast<std::size_t>(padded_[a]);
  }
  const int last = padded_[n - 1];
  spectrum_size_ = padded_size_ / last * (last / 2 + 1);

  plans_->real = fftw_alloc_real(padded_size_);
  plans_->spectrum = fftw_alloc_complex(spectrum_size_);
  std::array<int, 3> dims{};
  for (int a = 0; a < n; ++a) dims[a] = padded_[a];
  plans_->forward = fftw_plan_dft_r2c(n, dims.data(), plans_->real,
                                      plans_->spectrum, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_dft_c2r(n, dims.data(), plans_->spectrum,
                                       plans_->real, FFTW_ESTIMATE);

  // Kernel on the padded torus: offset o sits at index o mod P.
  const double vol = grid.cell_volume();
  for (std::size_t p = 0; p < padded_size_; ++p) {
    std::size_t rem = p;
    std::array<int, 3> off{0, 0, 0};
    bool used = true;
    for (int a = 2; a >= 0; --a) {
      const int j = static_cast<int>(rem % padded_[a]);
      rem /= padded_[a];
      const int na = a < n ? grid.cells(a) : 1;
      if (j < na) {
        off[a] = j;
      } else if (j > padded_[a] - na) {
        off[a] = j - padded_[a];
      } else {
        used = false;
      }
    }
    plans_->real[p] = used ? vol * weight(off) : 0.0;
  }
  fftw_execute(plans_->forward);
  kernel_hat_.resize(spectrum_size_);
  operator_norm_ = 0.0;
  for (std::size_t i = 0; i < spectrum_size_; ++i) {
    kernel_hat_[i] = {plans_->spectrum[i][0], plans_->spectrum[i][1]};
    operator_norm_ = std::max(operator_norm_, std::abs(kernel_hat_[i]));
  }
}

Convolver::~Convolver() {
  if (!plans_) return;
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->backward);
  fftw_free(plans_->real);
  fftw_free(plans_->spectrum);
}

double Convolver::weight(const std::array<int, 3>& off) const {
  if (off[0] == 0 && off[1] == 0 && off[2] == 0) return central_weight_;
  const double r2 = double(off[0]) * off[0] + double(off[1]) * off[1] +
                    double(off[2]) * off[2];
  return kernel_value(spec_, grid_.h() * std::sqrt(r2));
}

void Convolver::apply(std::span<const double> f, std::span<double> out) const {
  if (f.size() != grid_.size() || out.size() != grid_.size()) {
    throw KernelError("convolution input does not match the grid");
  }
  const auto& nc = grid_.cells();
  double* real = plans_->real;
  std::fill(real, real + padded_size_, 0.0);
  for (int i0 = 0; i0 < nc[0]; ++i0) {
    for (int i1 = 0; i1 < nc[1]; ++i1) {
      const std::size_t src = (std::size_t(i0) * nc[1] + i1) * nc[2];
      const std::size_t dst =
          (std::size_t(i0) * padded_[1] + i1) * padded_[2];
      std::copy_n(f.data() + src, nc[2], real + dst);
    }
  }
  fftw_execute(plans_->forward);
  const double scale = 1.0 / static_cast<double>(padded_size_);
  for (std::size_t i = 0; i < spectrum_size_; ++i) {
    const std::complex<double> v{plans_->spectrum[i][0], plans_->spectrum[i][1]};
    const std::complex<double> w = v * kernel_hat_[i] * scale;
    plans_->spectrum[i][0] = w.real();
    plans_->spectrum[i][1] = w.imag();
  }
  fftw_execute(plans_->backward);
  for (int i0 = 0; i0 < nc[0]; ++i0) {
    for (int i1 = 0; i1 < nc[1]; ++i1) {
      const std::size_t dst = (std::size_t(i0) * nc[1] + i1) * nc[2];
      const std::size_t src =
          (std::size_t(i0) * padded_[1] + i1) * padded_[2];
      std::copy_n(real + src, nc[2], out.data() + dst);
    }
  }
}

std::vector<double> Convolver::apply(std::span<const double> f) const {
  std::vector<double> out(grid_.size());
  apply(f, out);
  return out;
}

PotentialField potential(const DensityField& f, const KernelSpec& spec) {
  const Convolver conv(f.grid(), spec);
  return PotentialField{f.grid(), conv.apply(f.values()), f.mass()};
}

std::vector<double> potential_direct(const Grid& grid,
                                     std::span<const double> f,
                                     const KernelSpec& spec) {
  const double w0 = central_cell_weight(spec, grid);
  const double vol = grid.cell_volume();
  const auto& nc = grid.cells();
  // Weight table over offsets -(n-1)..(n-1) per axis.
  std::array<int, 3> ext{};
  for (int a = 0; a < 3; ++a) ext[a] = 2 * nc[a] - 1;
  std::vector<double> table(static_cast<std::size_t>(ext[0]) * ext[1] * ext[2]);
  for (int o0 = 0; o0 < ext[0]; ++o0) {
    for (int o1 = 0; o1 < ext[1]; ++o1) {
      for (int o2 = 0; o2 < ext[2]; ++o2) {
        const double d0 = o0 - (nc[0] - 1), d1 = o1 - (nc[1] - 1),
                     d2 = o2 - (nc[2] - 1);
        const double r2 = d0 * d0 + d1 * d1 + d2 * d2;
        table[(std::size_t(o0) * ext[1] + o1) * ext[2] + o2] =
            r2 == 0.0 ? w0 : kernel_value(spec, grid.h() * std::sqrt(r2));
      }
    }
  }
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto ik = grid.multi_index(k);
    double s = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (f[j] == 0.0) continue;
      const auto ij = grid.multi_index(j);
      const std::size_t t =
          (std::size_t(ik[0] - ij[0] + nc[0] - 1) * ext[1] +
           (ik[1] - ij[1] + nc[1] - 1)) *
              ext[2] +
          (ik[2] - ij[2] + nc[2] - 1);
      s += table[t] * f[j];
    }
    out[k] = vol * s;
  }
  return out;
}

double pairing(const Grid& grid, std::span<const double> f,
               std::span<const double> v) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * v[k];
  return s * grid.cell_volume();
}

double interaction(const DensityField& f, const DensityField& g,
                   const KernelSpec& spec) {
  if (f.grid() != g.grid()) throw KernelError("interaction: grid mismatch");
  const Convolver conv(f.grid(), spec);
  const auto vg = conv.apply(g.values());
  return pairing(f.grid(), f.values(), vg);
}

}  // namespace twophase
