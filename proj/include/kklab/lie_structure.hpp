#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kklab/chart_calculus.hpp"
#include "kklab/types.hpp"

namespace kklab {

/// Structure constants c^alpha_{mu nu} of a unimodular Lie algebra.
class LieStructure {
 public:
  LieStructure() = default;
  /// Validates antisymmetry (exact), the Jacobi identity (1e-12) and c^k_{mu k} = 0.
  LieStructure(Tensor3 constants, std::string label);

  int dim() const { return dim_; }
  const std::string& label() const { return label_; }
  /// c^alpha_{mu nu}
  double c(int alpha, int mu, int nu) const { return c_(alpha, mu, nu); }
  const Tensor3& constants() const { return c_; }
  bool is_abelian() const;

  double jacobi_residual() const;
  double unimodularity_residual() const;
  /// Matrix of ad_a: (ad_a)^mu_nu = c^mu_{alpha nu} a^alpha.
  Mat ad(const Vec& a) const;

 private:
  int dim_ = 0;
  Tensor3 c_;
  std::string label_;
};

enum class GroupKind { Torus, SU2 };

/// Coordinate chart on the group manifold with its invariant-frame data.
struct GroupChart {
  GroupKind kind = GroupKind::Torus;
  int dim = 0;
  Vec coords_at_identity;
  Domain domain;
  /// Right-invariant frame: columns are the generators of left multiplication at a.
  std::function<Mat(const Vec&)> v_bar;
  /// Inverse of v_bar; rows are the right-invariant Maurer-Cartan forms.
  std::function<Mat(const Vec&)> u_bar;
  /// Adjoint representation rho(a) = u_bar(a) v(a).
  std::function<Mat(const Vec&)> rho;
  /// Chart coordinates of the product ab.
  std::function<Vec(const Vec&, const Vec&)> composition;
  std::function<Vec(const Vec&)> inverse;
  /// Volume of the group in the metric u_bar^T u_bar (gamma = identity).
  double unit_volume = 1.0;
  /// Class-function mollifier k_L(theta^{-1} a) with Haar integral 1; larger order is sharper.
  std::function<double(const Vec& theta, const Vec& a, int order)> relative_mollifier;
};

struct LieGroup {
  LieStructure structure;
  GroupChart chart;
};

/// SU(2) with c^alpha_{mu nu} = epsilon_{alpha mu nu} in exponential coordinates, |a| < 2 pi.
LieGroup build_su2();

/// U(1)^n with angle coordinates in [0, 2 pi).
LieGroup build_abelian(int n);

/// Scalar curvature of the group with the invariant metric gamma, closed form in the structure constants.
double orbit_scalar_curvature(const LieStructure& ls, const Mat& gamma,
                              SignConvention convention = SignConvention::PositiveSpheres);

struct HaarQuadrature {
  std::vector<Vec> nodes;
  std::vector<double> weights;

  double integrate(const std::function<double(const Vec&)>& f) const;
  double weight_sum() const;
};

/// Product quadrature for the normalized Haar measure. For SU(2): Gauss-Legendre in
/// the exponential radius and in cos(polar), uniform in azimuth; for tori: uniform grid.
HaarQuadrature haar_quadrature(const GroupChart& gc, int resolution);

/// Fibre components of the Killing fields of the right action at group point a;
/// column alpha is K_alpha (the left-invariant frame v = v_bar rho).
Mat killing_vectors_adapted(const GroupChart& gc, const Vec& a);

/// Character of the spin-j irrep of SU(2) at exponential coordinates a.
double su2_character(double spin, const Vec& a);

}  // namespace kklab
