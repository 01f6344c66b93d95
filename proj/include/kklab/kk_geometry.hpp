#pragma once

#include <optional>
#include <string>

#include "kklab/chart_calculus.hpp"
#include "kklab/lie_structure.hpp"
#include "kklab/physical_params.hpp"
#include "kklab/types.hpp"

namespace kklab {

/// A principal bundle with Kaluza-Klein metric, given in adapted coordinates (x, a).
struct KKBundle {
  std::string label;
  int base_dim = 0;
  Domain base_domain;
  LieGroup group;
  MatrixField h;      // h_ij(x), base_dim x base_dim
  MatrixField gamma;  // gamma_{mu nu}(x), dim_g x dim_g
  MatrixField A;      // A(i, mu) = A^mu_i(x), base_dim x dim_g
  std::optional<ScalarField> potential;

  int fibre_dim() const { return group.structure.dim(); }
  int total_dim() const { return base_dim + fibre_dim(); }
  ChartedMetric base_metric() const;
  /// sigma(x) = (x, e)
  Vec section(const Vec& x) const;
  double potential_at(const Vec& x) const { return potential ? (*potential)(x) : 0.0; }
  /// ln det gamma(x)
  double log_det_gamma(const Vec& x) const;
};

/// Total-space metric with blocks h + A gamma A, A gamma u_bar, u_bar^T gamma u_bar.
ChartedMetric assemble_kk_metric(const KKBundle& b);

/// F^alpha_im stored as (i, m, alpha).
Tensor3 field_strength(const KKBundle& b, const Vec& x, const FDScheme& s = {});

/// D_i gamma_{mu nu} stored as (i, mu, nu).
Tensor3 covariant_D_gamma(const KKBundle& b, const Vec& x, const FDScheme& s = {});

/// j^n_{alpha beta} = -1/2 h^{ni} D_i gamma_{alpha beta}, stored as (n, alpha, beta).
Tensor3 second_fundamental_form(const KKBundle& b, const Vec& x, const FDScheme& s = {});

struct AmbientSecondFundamentalForm {
  Tensor3 j;         // (n, alpha, beta), horizontal part projected onto the base
  Mat orbit_metric;  // d_{alpha beta} = K_alpha G K_beta at (x, e)
};

/// Second fundamental form of the orbit from the total-space connection:
/// Pi(nabla_K K) at (x, e) with the assembled metric, projected onto the base.
AmbientSecondFundamentalForm second_fundamental_form_ambient(const KKBundle& b, const Vec& x, const FDScheme& s = {});

struct JacobianValue {
  double j_tilde = 0.0;   // Delta_M ln gamma + 1/4 |d ln gamma|^2_h
  double jacobian = 0.0;  // -(mu^2 kappa / 8) j_tilde
};

JacobianValue jacobian_direct(const KKBundle& b, const Vec& x, const FDScheme& s = {}, const PhysicalParams& p = {});

/// Same quantity as h^ij (d_i d_j - Gamma^k_ij d_k) ln gamma + ...; several times cheaper than
/// the nested divergence form, used inside path loops.
JacobianValue jacobian_from_jet(const KKBundle& b, const Vec& x, const FDScheme& s = {}, const PhysicalParams& p = {});

/// R_P - R_M - R_G - 1/4 gamma F^2 - |j|^2 with curvatures in the negative-spheres convention.
double jacobian_geometric(const KKBundle& b, const Vec& x, const FDScheme& s = {});

/// The gamma-derivative terms of the curvature decomposition at x.
struct GammaDerivativeTerms {
  double dgamma2 = 0.0;  // 1/4 h^{ij} g^{ms} g^{nk} (D_i g_mn)(D_j g_sk)
  double line2 = 0.0;    // 1/4 h^{ij} tr(g^-1 d_i g) tr(g^-1 d_j g) - h^{ij} g^{ms} g^{nk} d_i g_mn d_j g_sk
  double line3 = 0.0;    // h^{ij} g^{mn} (d_i d_j g_mn - Gamma^k_ij d_k g_mn)
  double lift_basis_tail = 0.0;  // same three lines written in the horizontal-lift basis
};

GammaDerivativeTerms gamma_derivative_terms(const KKBundle& b, const Vec& x, const FDScheme& s = {});

/// 1/4 gamma_{mu nu} F^mu_ij F^nu_kl h^ik h^jl
double field_strength_square(const KKBundle& b, const Vec& x, const FDScheme& s = {});

/// h_kn gamma^{a m} gamma^{b n} j^k_ab j^n_mn
double sff_norm2(const KKBundle& b, const Vec& x, const Tensor3& j);

struct DecompositionReport {
  Vec x;
  double R_P = 0.0;
  double R_M = 0.0;
  double R_G = 0.0;
  double F2_term = 0.0;
  double Dgamma2_term = 0.0;
  double j_norm2 = 0.0;
  double J_tilde_direct = 0.0;
  double J_tilde_geometric = 0.0;
  /// R_P minus the full coordinate-basis expansion (negative-spheres curvature definition).
  double residual = 0.0;
  SignConvention convention = SignConvention::PositiveSpheres;
  double line2_term = 0.0;
  double line3_term = 0.0;
  /// R_P - (R_M + R_G - F2 - |j|^2 - J_tilde): the relation for the other curvature definition.
  double remark_residual = 0.0;
};

DecompositionReport decomposition_report(const KKBundle& b, const Vec& x, const FDScheme& s = {},
                                         SignConvention convention = SignConvention::PositiveSpheres);

}  // namespace kklab
