#pragma once

namespace kklab {

/// Physical constants entering the evolution equation. mu^2 = hbar / m.
struct PhysicalParams {
  double hbar = 1.0;
  double m = 1.0;
  double kappa = 1.0;

  double mu2() const { return hbar / m; }
  /// mu^2 kappa, the diffusion coefficient of the generator 1/2 mu^2 kappa Laplacian.
  double diffusion() const { return mu2() * kappa; }
};

}  // namespace kklab
