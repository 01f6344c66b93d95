#include "kklab/reduced_quantum.hpp"

#include <cmath>
#include <limits>

#include "kklab/finite_difference.hpp"

namespace kklab {

namespace {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

CMat connection_matrix(const Mat& A, int i, const Representation& rep, int dim_v) {
  CMat g = CMat::Zero(dim_v, dim_v);
  for (std::size_t a = 0; a < rep.generators.size(); ++a) g += A(i, static_cast<int>(a)) * rep.generators[a];
  return g;
}

}  // namespace

double Representation::commutation_residual(const LieStructure& ls) const {
  if (static_cast<int>(generators.size()) != ls.dim()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  const int n = ls.dim();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      CMat r = generators[sz(a)] * generators[sz(b)] - generators[sz(b)] * generators[sz(a)];
      for (int m = 0; m < n; ++m) r -= ls.c(m, a, b) * generators[sz(m)];
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
  return worst;
}

Representation trivial_representation(int dim_g, int dim_v) {
  Representation rep;
  rep.label = "trivial";
  rep.generators.assign(sz(dim_g), CMat::Zero(dim_v, dim_v));
  return rep;
}

Representation su2_spin_half() {
  Representation rep;
  rep.label = "spin-1/2";
  CMat s1(2, 2), s2(2, 2), s3(2, 2);
  s1 << 0, 1, 1, 0;
  s2 << 0, -kI, kI, 0;
  s3 << 1, 0, 0, -1;
  for (const CMat& s : {s1, s2, s3}) rep.generators.push_back(-0.5 * kI * s);
  return rep;
}

Representation adjoint_representation(const LieStructure& ls) {
  Representation rep;
  rep.label = "adjoint";
  const int n = ls.dim();
  for (int a = 0; a < n; ++a) {
    CMat j = CMat::Zero(n, n);
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) j(b, c) = ls.c(b, a, c);
    rep.generators.push_back(j);
  }
  return rep;
}

Representation u1_charge(double q) {
  Representation rep;
  rep.label = "u1-charge";
  rep.generators.push_back(CMat::Constant(1, 1, kI * q));
  return rep;
}

HamiltonianCoeffs scalar_hamiltonian_coeffs(const KKBundle& b, const Vec& x, const FDScheme& s,
                                            const PhysicalParams& p) {
  require_interior(b.base_domain, x, s, 2.0);
  HamiltonianCoeffs hc;
  hc.x = x;
  hc.dim_v = 1;
  const Vec xw = b.base_domain.wrap(x);
  hc.kinetic_inverse_metric = checked_inverse(b.h(xw), "base metric");
  hc.laplacian_prefactor = -p.hbar * p.hbar / (2.0 * p.m);
  hc.first_order.assign(sz(b.base_dim), CMat::Zero(1, 1));
  hc.connection_zeroth = CMat::Zero(1, 1);
  hc.casimir_block = CMat::Zero(1, 1);
  hc.casimir_prefactor = p.hbar * p.hbar / (2.0 * p.m);
  hc.j_tilde = jacobian_geometric(b, x, s);
  hc.potential = b.potential_at(xw);
  hc.potential_matrix = CMat::Constant(1, 1, p.hbar * p.hbar / (8.0 * p.m) * hc.j_tilde + hc.potential);
  return hc;
}

HamiltonianCoeffs matrix_hamiltonian_coeffs(const KKBundle& b, const Representation& rep, const Vec& x,
                                            const FDScheme& s, const HamiltonianOptions& opt) {
  const LieStructure& ls = b.group.structure;
  const double mismatch = rep.commutation_residual(ls);
  if (!(mismatch <= 1e-10))
    throw RepresentationMismatch("generators of '" + rep.label + "' do not close on the structure constants of '" +
                                 ls.label() + "'");
  require_interior(b.base_domain, x, s, 2.0);
  const PhysicalParams& p = opt.physical;
  const int nb = b.base_dim;
  const int nv = rep.dim();
  const Vec xw = b.base_domain.wrap(x);

  HamiltonianCoeffs hc;
  hc.x = x;
  hc.dim_v = nv;
  const Mat hi = checked_inverse(b.h(xw), "base metric");
  hc.kinetic_inverse_metric = hi;
  hc.laplacian_prefactor = -p.hbar * p.hbar / (2.0 * p.m);

  const Mat A = b.A(xw);
  std::vector<CMat> conn;
  for (int i = 0; i < nb; ++i) conn.push_back(connection_matrix(A, i, rep, nv));

  hc.first_order.assign(sz(nb), CMat::Zero(nv, nv));
  for (int j = 0; j < nb; ++j)
    for (int i = 0; i < nb; ++i) hc.first_order[sz(j)] += 2.0 * hi(i, j) * conn[sz(i)];

  // d_i Gamma_j by differencing the real connection components.
  const MatrixField a_field = [&b](const Vec& y) { return b.A(b.base_domain.wrap(y)); };
  std::vector<Mat> dA;
  for (int i = 0; i < nb; ++i) dA.push_back(fd::first(a_field, x, i, s));
  const Tensor3 base_gamma = christoffel(b.base_metric(), x, s);

  CMat zeroth = CMat::Zero(nv, nv);
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      if (hi(i, j) == 0.0) continue;
      CMat term = connection_matrix(dA[sz(i)], j, rep, nv) + conn[sz(i)] * conn[sz(j)];
      for (int m = 0; m < nb; ++m) term -= base_gamma(m, i, j) * conn[sz(m)];
      zeroth += hi(i, j) * term;
    }
  hc.connection_zeroth = zeroth;

  const Mat gi = checked_inverse(b.gamma(xw), "orbit metric");
  CMat casimir = CMat::Zero(nv, nv);
  for (int a = 0; a < ls.dim(); ++a)
    for (int c = 0; c < ls.dim(); ++c)
      if (gi(a, c) != 0.0) casimir -= gi(a, c) * rep.generators[sz(a)] * rep.generators[sz(c)];
  hc.casimir_block = casimir;
  hc.casimir_prefactor = opt.casimir_prefactor.value_or(p.hbar * p.hbar / (2.0 * p.m));

  hc.j_tilde = jacobian_geometric(b, x, s);
  hc.potential = b.potential_at(xw);
  const CMat id = CMat::Identity(nv, nv);
  hc.potential_matrix =
      hc.casimir_prefactor * casimir + (p.hbar * p.hbar / (8.0 * p.m) * hc.j_tilde + hc.potential) * id;
  return hc;
}

KappaForm kappa_form(double hbar, double m, std::complex<double> kappa, double j_tilde, double potential) {
  return {hbar * kappa / (2.0 * m), -hbar * kappa / (8.0 * m) * j_tilde + potential / (hbar * kappa)};
}

KappaForm continued_to_schroedinger(double hbar, double m, double j_tilde, double potential) {
  const KappaForm k = kappa_form(hbar, m, kI, j_tilde, potential);
  const cd factor = -hbar / kI;
  return {factor * k.laplacian, factor * k.zeroth};
}

double hermiticity_residual(const CMat& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace kklab
