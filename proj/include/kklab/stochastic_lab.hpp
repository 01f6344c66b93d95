#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kklab/chart_calculus.hpp"
#include "kklab/kk_geometry.hpp"
#include "kklab/physical_params.hpp"

namespace kklab {

enum class FrameKind {
  Symmetric,  // principal square root of G^{-1}
  Cholesky,   // L^{-T} with G = L L^T; same law, cheaper
};

/// Diffusion d eta = 1/2 mu^2 kappa G^{-1/2} d_B(G^{1/2} G^{AB}) dt + mu sqrt(kappa) X dw
/// with a Feynman-Kac weight exp{ int V / (mu^2 kappa m) + int J }.
struct SDESpec {
  ChartedMetric metric;
  ScalarField potential;  // empty means V = 0
  ScalarField jacobian;   // empty means J = 0
  PhysicalParams params;
  FrameKind frame = FrameKind::Cholesky;
  double drift_step = 1e-5;
};

/// Principal symmetric square root X of G^{-1}: X X^T = G^{-1}.
Mat metric_sqrt_frame(const ChartedMetric& m, const Vec& p);

/// Frame used by the integrator (principal root or Cholesky factor).
Mat diffusion_frame(const SDESpec& spec, const Vec& p);

Vec sde_drift(const SDESpec& spec, const Vec& p);

/// Seed of path `index` derived from the master seed by counter-based mixing.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index);

struct PathResult {
  Vec end;
  double log_weight = 0.0;
  int steps = 0;
  bool exited = false;
  std::vector<Vec> trace;  // filled when recording
};

/// Euler-Maruyama from t_a to t_b. `seed` is the per-path seed.
PathResult euler_maruyama_path(const SDESpec& spec, const Vec& start, double t_a, double t_b, double dt,
                               std::uint64_t seed, bool record = false);

struct EnsembleOptions {
  double t_a = 0.0;
  double t_b = 0.5;
  double dt = 1e-3;
  int n_paths = 100000;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Weighted observable per path in index order; discarded paths are NaN.
std::vector<double> simulate_observable(const SDESpec& spec, const Vec& start, const EnsembleOptions& opt,
                                        const std::function<double(const Vec&)>& observable);

struct SampleMean {
  double mean = 0.0;
  double std_error = 0.0;
  int used = 0;
  int discarded = 0;
};

/// Compensated mean and standard error over the non-NaN entries, in index order.
SampleMean sample_mean(const std::vector<double>& values);

struct KernelEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n_paths = 0;
  int n_discarded = 0;
  double time_step = 0.0;
  Vec start, end;
  double t_a = 0.0, t_b = 0.0;
  double smoothing_width = 0.0;
};

/// Normalized Gaussian bump of width w in chart coordinates (minimum image on periodic axes).
double chart_gaussian(const Domain& d, const Vec& p, const Vec& centre, double width);

/// Default mollifier width: three diffusion lengths mu sqrt(kappa dt).
double default_smoothing_width(const PhysicalParams& p, double dt);

/// Kernel G(x_b, t_b; x_a, t_a) with respect to the Riemannian volume.
KernelEstimate feynman_kac_kernel(const SDESpec& spec, const Vec& x_a, const Vec& x_b, const EnsembleOptions& opt,
                                  double smoothing_width);

struct ReductionOptions {
  EnsembleOptions ensemble;
  double smoothing_width = 0.0;  // <= 0 selects default_smoothing_width
  int haar_resolution = 8;
  int mollifier_order = 2;
  FDScheme jacobian_fd{{1e-3}, 2, false};
};

struct ReductionCheck {
  std::string case_name;
  double lhs = 0.0, lhs_error = 0.0;
  double rhs = 0.0, rhs_error = 0.0;
  double ratio = 0.0;
  double combined_error = 0.0;  // standard error of the ratio
  int n_paths = 0;
  int discarded_lhs = 0, discarded_rhs = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double smoothing_width = 0.0;

  double stderr_distance() const { return std::abs(ratio - 1.0) / combined_error; }
};

/// gamma(x_b)^{-1/4} gamma(x_a)^{-1/4} G_M against V0 * Haar average of G_P(sigma(x_b) theta; sigma(x_a)),
/// both sides estimated from independent streams.
ReductionCheck reduction_check(const KKBundle& b, const Vec& x_a, const Vec& x_b, const ReductionOptions& opt,
                               const PhysicalParams& params = {});

}  // namespace kklab
