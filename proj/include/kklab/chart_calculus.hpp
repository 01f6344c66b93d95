#pragma once

#include <string>
#include <vector>

#include "kklab/types.hpp"

namespace kklab {

/// Axis-aligned coordinate box. Periodic axes wrap into [lower, upper).
struct Domain {
  Vec lower;
  Vec upper;
  std::vector<bool> periodic;

  static Domain box(const Vec& lower, const Vec& upper);
  static Domain periodic_box(int dim, double lower, double upper);

  int dim() const { return static_cast<int>(lower.size()); }
  /// Concatenate two domains (base axes first).
  Domain product(const Domain& other) const;
  Vec wrap(Vec p) const;
  /// True when every non-periodic coordinate lies at least `margin` inside the box.
  bool contains(const Vec& p, double margin = 0.0) const;
};

/// A metric field G_AB on one coordinate chart.
struct ChartedMetric {
  int dim = 0;
  MatrixField metric_at;
  Domain domain;
  std::string label;

  /// Metric at p with periodic wrapping applied.
  Mat at(const Vec& p) const { return metric_at(domain.wrap(p)); }
};

/// Central finite-difference settings.
struct FDScheme {
  std::vector<double> step{1e-3};  // one entry broadcasts to every axis
  int order = 4;                   // 2 or 4
  bool richardson = false;

  double h(int axis) const { return step.size() == 1 ? step[0] : step.at(static_cast<std::size_t>(axis)); }
  /// Furthest stencil offset along `axis` for one level of differencing.
  double reach(int axis) const { return (order == 4 ? 2.0 : 1.0) * h(axis); }
  FDScheme scaled(double factor) const;
  /// Throws ConfigError for unsupported orders or steps too large for the domain.
  void validate(const Domain& domain) const;
};

enum class SignConvention {
  /// Round spheres have positive scalar curvature (Ricci_BD = R^A_BAD).
  PositiveSpheres,
  /// Contraction R_AC = R_AMC^M of the commutator curvature; spheres come out negative.
  NegativeSpheres,
};

std::string to_string(SignConvention c);
SignConvention parse_convention(const std::string& name);
SignConvention opposite(SignConvention c);
inline double sign_of(SignConvention c) { return c == SignConvention::PositiveSpheres ? 1.0 : -1.0; }

struct CurvaturePack {
  Tensor3 christoffel;  // (A, B, C) -> Gamma^A_BC
  Tensor4 riemann;      // (A, B, C, D) -> R^A_BCD
  Mat ricci;
  double scalar = 0.0;
  SignConvention convention = SignConvention::PositiveSpheres;
};

/// Metric value and coordinate derivatives at a point.
struct MetricJet {
  Mat g;
  Mat g_inv;
  std::vector<Mat> dg;                // dg[C] = d_C G
  std::vector<std::vector<Mat>> d2g;  // d2g[C][D] = d_C d_D G, empty if not requested
};

/// Inverse of a symmetric matrix through LU with partial pivoting.
/// Throws SingularMetric when the reciprocal condition estimate is below 1e-12.
Mat checked_inverse(const Mat& g, const std::string& what = "metric");

/// Throws OutOfDomain unless every stencil point p +- reach lies inside the chart.
void require_interior(const Domain& domain, const Vec& p, const FDScheme& s, double reach_multiplier = 1.0);

MetricJet metric_jet(const ChartedMetric& m, const Vec& p, const FDScheme& s, bool second_derivatives);

Tensor3 christoffel(const ChartedMetric& m, const Vec& p, const FDScheme& s = {});
Tensor3 christoffel_from_jet(const MetricJet& jet);

CurvaturePack curvature_pack(const ChartedMetric& m, const Vec& p, const FDScheme& s = {},
                             SignConvention convention = SignConvention::PositiveSpheres);

/// Shorthand for curvature_pack(...).scalar.
double scalar_curvature(const ChartedMetric& m, const Vec& p, const FDScheme& s = {},
                        SignConvention convention = SignConvention::PositiveSpheres);

/// G^{-1/2} d_A (G^{AB} G^{1/2} d_B f) by nested central differences.
double laplace_beltrami(const ChartedMetric& m, const ScalarField& f, const Vec& p, const FDScheme& s = {});

/// Gradient of a scalar field by central differences (no domain check).
Vec fd_gradient(const ScalarField& f, const Vec& p, const FDScheme& s);

/// Derivative of a matrix field along one axis by central differences (no domain check).
Mat fd_partial(const MatrixField& f, const Vec& p, int axis, const FDScheme& s);

}  // namespace kklab
