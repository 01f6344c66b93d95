#include "kklab/kk_geometry.hpp"

#include <cmath>

#include <Eigen/LU>

#include "kklab/finite_difference.hpp"

namespace kklab {

namespace {

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

// Base-point data shared by the reduced formulas.
struct BaseJet {
  Mat h, h_inv;
  Mat gamma, gamma_inv;
  Mat A;                    // (i, mu)
  std::vector<Mat> dgamma;  // d_i gamma
  std::vector<Mat> dA;      // d_i A
};

MatrixField wrapped(const MatrixField& f, const Domain& d) {
  return [f, d](const Vec& x) { return f(d.wrap(x)); };
}

BaseJet base_jet(const KKBundle& b, const Vec& x, const FDScheme& s) {
  require_interior(b.base_domain, x, s);
  BaseJet jet;
  const Vec xw = b.base_domain.wrap(x);
  jet.h = b.h(xw);
  jet.h_inv = checked_inverse(jet.h, "base metric");
  jet.gamma = b.gamma(xw);
  jet.gamma_inv = checked_inverse(jet.gamma, "orbit metric");
  jet.A = b.A(xw);
  const MatrixField gamma = wrapped(b.gamma, b.base_domain);
  const MatrixField conn = wrapped(b.A, b.base_domain);
  for (int i = 0; i < b.base_dim; ++i) {
    Mat dg = fd::first(gamma, x, i, s);
    jet.dgamma.push_back(0.5 * (dg + dg.transpose()));
    jet.dA.push_back(fd::first(conn, x, i, s));
  }
  return jet;
}

Tensor3 covariant_from(const LieStructure& ls, const Mat& A, const Mat& gamma, const std::vector<Mat>& dgamma) {
  const int nb = static_cast<int>(dgamma.size());
  const int ng = ls.dim();
  Tensor3 D(nb, ng, ng);
  for (int i = 0; i < nb; ++i)
    for (int m = 0; m < ng; ++m)
      for (int n = m; n < ng; ++n) {
        double v = dgamma[sz(i)](m, n);
        for (int k = 0; k < ng; ++k)
          for (int s = 0; s < ng; ++s) v -= A(i, s) * (ls.c(k, s, m) * gamma(k, n) + ls.c(k, s, n) * gamma(m, k));
        D(i, m, n) = v;
        D(i, n, m) = v;
      }
  return D;
}

// 1/4 h^{ij} g^{ms} g^{nk} X_i,mn Y_j,sk for derivative-like arrays X, Y indexed (i, m, n).
double contract_pair(const Mat& h_inv, const Mat& g_inv, const Tensor3& X, const Tensor3& Y) {
  const int nb = X.extent(0);
  const int ng = X.extent(1);
  double total = 0.0;
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      if (h_inv(i, j) == 0.0) continue;
      Mat xi(ng, ng), yj(ng, ng);
      for (int m = 0; m < ng; ++m)
        for (int n = 0; n < ng; ++n) {
          xi(m, n) = X(i, m, n);
          yj(m, n) = Y(j, m, n);
        }
      // g^{ms} X_mn g^{nk} Y_sk = tr(g^-1 X g^-1 Y^T)
      total += h_inv(i, j) * (g_inv * xi * g_inv * yj.transpose()).trace();
    }
  return total;
}

Tensor3 as_tensor(const std::vector<Mat>& mats) {
  const int nb = static_cast<int>(mats.size());
  const int ng = nb ? static_cast<int>(mats[0].rows()) : 0;
  Tensor3 t(nb, ng, ng);
  for (int i = 0; i < nb; ++i)
    for (int m = 0; m < ng; ++m)
      for (int n = 0; n < ng; ++n) t(i, m, n) = mats[sz(i)](m, n);
  return t;
}

}  // namespace

ChartedMetric KKBundle::base_metric() const {
  return ChartedMetric{base_dim, h, base_domain, label + ":base"};
}

Vec KKBundle::section(const Vec& x) const {
  Vec q(total_dim());
  q << x, group.chart.coords_at_identity;
  return q;
}

double KKBundle::log_det_gamma(const Vec& x) const {
  const Mat g = gamma(base_domain.wrap(x));
  Eigen::PartialPivLU<Mat> lu(g);
  const double det = lu.determinant();
  if (!(det > 0.0)) throw SingularMetric("orbit metric determinant is not positive");
  return std::log(det);
}

ChartedMetric assemble_kk_metric(const KKBundle& b) {
  const int nb = b.base_dim;
  const int ng = b.fibre_dim();
  ChartedMetric m;
  m.dim = nb + ng;
  m.domain = b.base_domain.product(b.group.chart.domain);
  m.label = b.label;
  m.metric_at = [h = b.h, gamma = b.gamma, A = b.A, u_bar = b.group.chart.u_bar, nb, ng](const Vec& q) -> Mat {
    const Vec x = q.head(nb);
    const Vec a = q.tail(ng);
    const Mat g = gamma(x);
    const Mat conn = A(x);
    const Mat u = u_bar(a);
    const Mat gu = g * u;
    Mat G(nb + ng, nb + ng);
    G.topLeftCorner(nb, nb) = h(x) + conn * g * conn.transpose();
    G.topRightCorner(nb, ng) = conn * gu;
    G.bottomLeftCorner(ng, nb) = G.topRightCorner(nb, ng).transpose();
    G.bottomRightCorner(ng, ng) = u.transpose() * gu;
    return G;
  };
  return m;
}

Tensor3 field_strength(const KKBundle& b, const Vec& x, const FDScheme& s) {
  const BaseJet jet = base_jet(b, x, s);
  const int nb = b.base_dim;
  const int ng = b.fibre_dim();
  const LieStructure& ls = b.group.structure;
  Tensor3 F(nb, nb, ng);
  for (int i = 0; i < nb; ++i)
    for (int m = i + 1; m < nb; ++m)
      for (int al = 0; al < ng; ++al) {
        double v = jet.dA[sz(i)](m, al) - jet.dA[sz(m)](i, al);
        for (int mu = 0; mu < ng; ++mu)
          for (int nu = 0; nu < ng; ++nu) v += ls.c(al, mu, nu) * jet.A(i, mu) * jet.A(m, nu);
        F(i, m, al) = v;
        F(m, i, al) = -v;
      }
  return F;
}

Tensor3 covariant_D_gamma(const KKBundle& b, const Vec& x, const FDScheme& s) {
  const BaseJet jet = base_jet(b, x, s);
  return covariant_from(b.group.structure, jet.A, jet.gamma, jet.dgamma);
}

Tensor3 second_fundamental_form(const KKBundle& b, const Vec& x, const FDScheme& s) {
  const BaseJet jet = base_jet(b, x, s);
  const Tensor3 D = covariant_from(b.group.structure, jet.A, jet.gamma, jet.dgamma);
  const int nb = b.base_dim;
  const int ng = b.fibre_dim();
  Tensor3 j(nb, ng, ng);
  for (int n = 0; n < nb; ++n)
    for (int a = 0; a < ng; ++a)
      for (int c = 0; c < ng; ++c) {
        double v = 0.0;
        for (int i = 0; i < nb; ++i) v += jet.h_inv(n, i) * D(i, a, c);
        j(n, a, c) = -0.5 * v;
      }
  return j;
}

AmbientSecondFundamentalForm second_fundamental_form_ambient(const KKBundle& b, const Vec& x, const FDScheme& s) {
  require_interior(b.base_domain, x, s);
  const ChartedMetric total = assemble_kk_metric(b);
  const Vec q = b.section(x);
  const MetricJet jet = metric_jet(total, q, s, false);
  const Tensor3 gam = christoffel_from_jet(jet);
  const int nb = b.base_dim;
  const int ng = b.fibre_dim();
  const int n = nb + ng;
  const GroupChart& gc = b.group.chart;
  const Vec a = gc.coords_at_identity;

  // K(:, alpha) in total coordinates; only fibre rows are nonzero.
  Mat K = Mat::Zero(n, ng);
  K.bottomRows(ng) = killing_vectors_adapted(gc, a);
  // dK[c] = d_c K for fibre axes c.
  std::vector<Mat> dK(sz(n), Mat::Zero(n, ng));
  const MatrixField kfield = [&gc](const Vec& aa) -> Mat { return gc.v_bar(aa) * gc.rho(aa); };
  FDScheme fibre_s = s;
  if (s.step.size() > 1) fibre_s.step.assign(s.step.begin() + nb, s.step.end());
  for (int c = 0; c < ng; ++c) dK[sz(nb + c)].bottomRows(ng) = fd::first(kfield, a, c, fibre_s);

  const Mat& G = jet.g;
  const Mat d = K.transpose() * G * K;
  const Mat d_inv = checked_inverse(d, "orbit Killing metric");
  const Mat Pi = Mat::Identity(n, n) - K * d_inv * K.transpose() * G;

  auto nabla = [&](int al, int be) -> Vec {
    Vec v = Vec::Zero(n);
    for (int e = 0; e < n; ++e) {
      double acc = 0.0;
      for (int c = 0; c < n; ++c) {
        acc += K(c, al) * dK[sz(c)](e, be);
        for (int d2 = 0; d2 < n; ++d2) acc += gam(e, c, d2) * K(c, al) * K(d2, be);
      }
      v[e] = acc;
    }
    return v;
  };

  const Mat h_inv = checked_inverse(b.h(b.base_domain.wrap(x)), "base metric");
  AmbientSecondFundamentalForm out;
  out.orbit_metric = d;
  out.j = Tensor3(nb, ng, ng);
  for (int al = 0; al < ng; ++al)
    for (int be = al; be < ng; ++be) {
      const Vec y = Pi * (0.5 * (nabla(al, be) + nabla(be, al)));
      const Vec g_y = G.topRows(nb) * y;  // G(y, d_k)
      const Vec comp = h_inv * g_y;
      for (int k = 0; k < nb; ++k) {
        out.j(k, al, be) = comp[k];
        out.j(k, be, al) = comp[k];
      }
    }
  return out;
}

JacobianValue jacobian_direct(const KKBundle& b, const Vec& x, const FDScheme& s, const PhysicalParams& p) {
  const ChartedMetric base = b.base_metric();
  const ScalarField log_gamma = [&b](const Vec& y) { return b.log_det_gamma(y); };
  const double lap = laplace_beltrami(base, log_gamma, x, s);
  const Vec grad = fd_gradient([&](const Vec& y) { return log_gamma(b.base_domain.wrap(y)); }, x, s);
  const Mat h_inv = checked_inverse(base.at(x), "base metric");
  JacobianValue v;
  v.j_tilde = lap + 0.25 * grad.dot(h_inv * grad);
  v.jacobian = -p.diffusion() / 8.0 * v.j_tilde;
  return v;
}

JacobianValue jacobian_from_jet(const KKBundle& b, const Vec& x, const FDScheme& s, const PhysicalParams& p) {
  const ChartedMetric base = b.base_metric();
  require_interior(base.domain, x, s);
  const int n = b.base_dim;
  auto f = [&b](const Vec& y) { return b.log_det_gamma(b.base_domain.wrap(y)); };
  const MetricJet jet = metric_jet(base, x, s, false);
  const Tensor3 gam = christoffel_from_jet(jet);
  const Vec grad = fd_gradient(f, x, s);
  double lap = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v = fd::second(f, x, i, j, s);
      for (int k = 0; k < n; ++k) v -= gam(k, i, j) * grad[k];
      lap += (i == j ? 1.0 : 2.0) * jet.g_inv(i, j) * v;
    }
  JacobianValue out;
  out.j_tilde = lap + 0.25 * grad.dot(jet.g_inv * grad);
  out.jacobian = -p.diffusion() / 8.0 * out.j_tilde;
  return out;
}

double field_strength_square(const KKBundle& b, const Vec& x, const FDScheme& s) {
  const Tensor3 F = field_strength(b, x, s);
  const Mat h_inv = checked_inverse(b.h(b.base_domain.wrap(x)), "base metric");
  const Mat g = b.gamma(b.base_domain.wrap(x));
  const int nb = b.base_dim;
  const int ng = b.fibre_dim();
  double total = 0.0;
  for (int mu = 0; mu < ng; ++mu)
    for (int nu = 0; nu < ng; ++nu) {
      if (g(mu, nu) == 0.0) continue;
      Mat Fm(nb, nb), Fn(nb, nb);
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
          Fm(i, j) = F(i, j, mu);
          Fn(i, j) = F(i, j, nu);
        }
      // F^mu_ij h^ik h^jl F^nu_kl = tr(Fm h^-1 Fn^T h^-1)
      total += g(mu, nu) * (Fm * h_inv * Fn.transpose() * h_inv).trace();
    }
  return 0.25 * total;
}

double sff_norm2(const KKBundle& b, const Vec& x, const Tensor3& j) {
  const Mat h = b.h(b.base_domain.wrap(x));
  const Mat g_inv = checked_inverse(b.gamma(b.base_domain.wrap(x)), "orbit metric");
  // h_kn g^{am} g^{bn} j^k_ab j^n_mn, same shape as contract_pair with h in place of h^-1
  return contract_pair(h, g_inv, j, j);
}

GammaDerivativeTerms gamma_derivative_terms(const KKBundle& b, const Vec& x, const FDScheme& s) {
  require_interior(b.base_domain, x, s, 2.0);
  const BaseJet jet = base_jet(b, x, s);
  const LieStructure& ls = b.group.structure;
  const int nb = b.base_dim;
  const Mat& hi = jet.h_inv;
  const Mat& gi = jet.gamma_inv;
  const Tensor3 D = covariant_from(ls, jet.A, jet.gamma, jet.dgamma);
  const Tensor3 dg = as_tensor(jet.dgamma);

  GammaDerivativeTerms t;
  t.dgamma2 = 0.25 * contract_pair(hi, gi, D, D);

  Vec tr(nb);
  for (int i = 0; i < nb; ++i) tr[i] = (gi * jet.dgamma[sz(i)]).trace();
  t.line2 = 0.25 * tr.dot(hi * tr) - contract_pair(hi, gi, dg, dg);

  const MatrixField gamma = wrapped(b.gamma, b.base_domain);
  const Tensor3 base_gamma = christoffel(b.base_metric(), x, s);
  double line3 = 0.0;
  for (int i = 0; i < nb; ++i)
    for (int j = i; j < nb; ++j) {
      if (hi(i, j) == 0.0) continue;
      Mat dd = fd::second(gamma, x, i, j, s);
      for (int k = 0; k < nb; ++k) dd -= base_gamma(k, i, j) * jet.dgamma[sz(k)];
      const double v = hi(i, j) * (gi.cwiseProduct(dd)).sum();
      line3 += (i == j) ? v : 2.0 * v;
    }
  t.line3 = line3;

  // Horizontal-lift form: 1/4 h g g [(D g)(D g) + (tr g^-1 D g)^2] + h^{ij} nabla_i (g^{ab} D_j g_ab)
  Vec trD(nb);
  for (int i = 0; i < nb; ++i) {
    double v = 0.0;
    for (int m = 0; m < ls.dim(); ++m)
      for (int n = 0; n < ls.dim(); ++n) v += gi(m, n) * D(i, m, n);
    trD[i] = v;
  }
  auto w = [&](const Vec& y, int j) {
    const BaseJet jy = base_jet(b, y, s);
    const Tensor3 Dy = covariant_from(ls, jy.A, jy.gamma, jy.dgamma);
    double v = 0.0;
    for (int m = 0; m < ls.dim(); ++m)
      for (int n = 0; n < ls.dim(); ++n) v += jy.gamma_inv(m, n) * Dy(j, m, n);
    return v;
  };
  double div = 0.0;
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      if (hi(i, j) == 0.0) continue;
      const double d_i_wj = fd::first([&](const Vec& y) { return w(y, j); }, x, i, s);
      double conn = 0.0;
      for (int k = 0; k < nb; ++k) conn += base_gamma(k, i, j) * trD[k];
      div += hi(i, j) * (d_i_wj - conn);
    }
  t.lift_basis_tail = t.dgamma2 + 0.25 * trD.dot(hi * trD) + div;
  return t;
}

double jacobian_geometric(const KKBundle& b, const Vec& x, const FDScheme& s) {
  const auto neg = SignConvention::NegativeSpheres;
  const double r_p = scalar_curvature(assemble_kk_metric(b), b.section(x), s, neg);
  const double r_m = scalar_curvature(b.base_metric(), x, s, neg);
  const double r_g = orbit_scalar_curvature(b.group.structure, b.gamma(b.base_domain.wrap(x)), neg);
  const double f2 = field_strength_square(b, x, s);
  const double j2 = sff_norm2(b, x, second_fundamental_form(b, x, s));
  return r_p - r_m - r_g - f2 - j2;
}

DecompositionReport decomposition_report(const KKBundle& b, const Vec& x, const FDScheme& s,
                                         SignConvention convention) {
  DecompositionReport r;
  r.x = x;
  r.convention = convention;
  r.R_P = scalar_curvature(assemble_kk_metric(b), b.section(x), s, convention);
  r.R_M = scalar_curvature(b.base_metric(), x, s, convention);
  r.R_G = orbit_scalar_curvature(b.group.structure, b.gamma(b.base_domain.wrap(x)), convention);
  r.F2_term = field_strength_square(b, x, s);
  r.j_norm2 = sff_norm2(b, x, second_fundamental_form(b, x, s));
  const GammaDerivativeTerms t = gamma_derivative_terms(b, x, s);
  r.Dgamma2_term = t.dgamma2;
  r.line2_term = t.line2;
  r.line3_term = t.line3;
  r.J_tilde_direct = jacobian_direct(b, x, s).j_tilde;

  // Curvatures in the commutator-contraction convention, whatever was requested.
  const double to_negative = -sign_of(convention);
  r.J_tilde_geometric = to_negative * (r.R_P - r.R_M - r.R_G) - r.F2_term - r.j_norm2;
  r.residual = r.R_P - (r.R_M + r.R_G + r.F2_term + r.Dgamma2_term + r.line2_term + r.line3_term);
  r.remark_residual = r.R_P - (r.R_M + r.R_G - r.F2_term - r.j_norm2 - r.J_tilde_direct);
  return r;
}

}  // namespace kklab
