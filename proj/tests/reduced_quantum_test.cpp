#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "helpers.hpp"
#include "kklab/catalog.hpp"
#include "kklab/reduced_quantum.hpp"

using namespace kklab;
using testutil::vec;
using cd = std::complex<double>;
using std::numbers::pi;

namespace {

double cmax(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

KKBundle u1_torus(double shift) {
  KKBundle b;
  b.label = "u1-torus";
  b.base_dim = 2;
  b.base_domain = Domain::periodic_box(2, 0.0, 2 * pi);
  b.group = build_abelian(1);
  b.h = [](const Vec& x) {
    Mat h = Mat::Identity(2, 2);
    h(0, 0) = 1.0 + 0.2 * std::sin(x[1]);
    return h;
  };
  b.gamma = [](const Vec& x) { return Mat::Constant(1, 1, std::exp(0.3 * std::cos(x[0]))); };
  b.A = [shift](const Vec& x) {
    Mat a(2, 1);  // plus shift * grad(sin x cos y)
    a << 0.4 * std::sin(x[1]) + shift * std::cos(x[0]) * std::cos(x[1]),
        0.3 * std::cos(x[0]) - shift * std::sin(x[0]) * std::sin(x[1]);
    return a;
  };
  b.potential = [](const Vec& x) { return 0.5 * std::cos(x[0] + x[1]); };
  return b;
}

// H psi at x for a one-component section, from the coefficient fields.
cd apply(const KKBundle& b, const Representation& rep, const std::function<cd(const Vec&)>& psi, const Vec& x) {
  const FDScheme s;
  const HamiltonianCoeffs c = matrix_hamiltonian_coeffs(b, rep, x, s);
  const ChartedMetric base = b.base_metric();
  const double lap_re = laplace_beltrami(base, [&](const Vec& y) { return psi(y).real(); }, x, s);
  const double lap_im = laplace_beltrami(base, [&](const Vec& y) { return psi(y).imag(); }, x, s);
  cd first = 0.0;
  for (int j = 0; j < b.base_dim; ++j) {
    Vec p = x, m = x;
    p[j] += 1e-5;
    m[j] -= 1e-5;
    first += c.first_order[static_cast<std::size_t>(j)](0, 0) * (psi(p) - psi(m)) / 2e-5;
  }
  const cd v = psi(x);
  return c.laplacian_prefactor * (cd(lap_re, lap_im) + first + c.connection_zeroth(0, 0) * v) + c.potential_matrix(0, 0) * v;
}

}  // namespace

TEST_CASE("representations close on their structure constants") {
  const LieGroup su2 = build_su2();
  CHECK(su2_spin_half().commutation_residual(su2.structure) < 1e-15);
  CHECK(adjoint_representation(su2.structure).commutation_residual(su2.structure) < 1e-15);
  CHECK(u1_charge(2.5).commutation_residual(build_abelian(1).structure) == 0.0);
  for (const CMat& J : su2_spin_half().generators) CHECK(cmax(J + J.adjoint()) < 1e-15);
}

TEST_CASE("trivial representation reproduces the scalar path exactly") {
  std::mt19937_64 rng(2);
  for (const char* name : {"hopf", "trivial-su2-product", "warped-su2", "warped-u1-line"}) {
    const KKBundle b = resolve_geometry(name).bundle.value();
    const Vec x = random_point(b.base_domain, rng, 0.3);
    const HamiltonianCoeffs s = scalar_hamiltonian_coeffs(b, x);
    const HamiltonianCoeffs m = matrix_hamiltonian_coeffs(b, trivial_representation(b.fibre_dim()), x);
    INFO(name);
    CHECK(m.dim_v == 1);
    CHECK(m.laplacian_prefactor == s.laplacian_prefactor);
    CHECK(m.j_tilde == s.j_tilde);
    CHECK(cmax(m.potential_matrix - s.potential_matrix) == 0.0);
    CHECK(cmax(m.connection_zeroth - s.connection_zeroth) == 0.0);
    CHECK(cmax(m.zeroth_order() - s.zeroth_order()) == 0.0);
    for (std::size_t j = 0; j < s.first_order.size(); ++j) CHECK(cmax(m.first_order[j] - s.first_order[j]) == 0.0);
  }
}

TEST_CASE("scalar zeroth order") {
  const KKBundle prod = resolve_geometry("trivial-su2-product").bundle.value();
  CHECK(std::abs(scalar_hamiltonian_coeffs(prod, vec({1.0, 2.0})).potential_matrix(0, 0)) < 1e-7);
  const KKBundle hopf = resolve_geometry("hopf").bundle.value();
  CHECK(std::abs(scalar_hamiltonian_coeffs(hopf, vec({1.3, 0.2})).potential_matrix(0, 0)) < 1e-5);
  PhysicalParams p;
  p.hbar = 1.5;
  p.m = 0.8;
  const KKBundle w = resolve_geometry("warped-su2").bundle.value();
  const Vec x = vec({2.1, 0.6});
  const HamiltonianCoeffs c = scalar_hamiltonian_coeffs(w, x, {}, p);
  CHECK(c.potential_matrix(0, 0).real() ==
        doctest::Approx(p.hbar * p.hbar / (8 * p.m) * jacobian_direct(w, x).j_tilde).epsilon(1e-4));
  CHECK(c.laplacian_prefactor == doctest::Approx(-p.hbar * p.hbar / (2 * p.m)));
}

TEST_CASE("spin one-half casimir block") {
  const KKBundle b = resolve_geometry("trivial-su2-product").bundle.value();
  const HamiltonianCoeffs c = matrix_hamiltonian_coeffs(b, su2_spin_half(), vec({1.0, 1.0}));
  // -sum_a J_a J_a with J_a = -(i/2) sigma_a, computed directly
  CMat expected = CMat::Zero(2, 2);
  const cd I(0, 1);
  CMat sx(2, 2), sy(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  sy << 0, -I, I, 0;
  sz << 1, 0, 0, -1;
  for (const CMat* s : {&sx, &sy, &sz}) {
    const CMat J = -0.5 * I * *s;
    expected -= J * J;
  }
  CHECK(cmax(c.casimir_block - expected) < 1e-15);
  CHECK(cmax(c.casimir_block - 0.75 * CMat::Identity(2, 2)) < 1e-12);
  CHECK(c.casimir_prefactor == doctest::Approx(0.5));
  HamiltonianOptions opt;
  opt.casimir_prefactor = -2.0;
  const HamiltonianCoeffs d = matrix_hamiltonian_coeffs(b, su2_spin_half(), vec({1.0, 1.0}), {}, opt);
  CHECK(cmax(d.potential_matrix - c.potential_matrix + 2.5 * 0.75 * CMat::Identity(2, 2)) < 1e-7);
}

TEST_CASE("u1 charge with constant connection") {
  KKBundle b = resolve_geometry("trivial-u1-product(2)").bundle.value();
  Mat A0(2, 1);
  A0 << 0.3, -0.7;
  b.A = [A0](const Vec&) { return A0; };
  const double q = 1.5;
  const HamiltonianCoeffs c = matrix_hamiltonian_coeffs(b, u1_charge(q), vec({1.0, 2.0}));
  for (int j = 0; j < 2; ++j) CHECK(std::abs(c.first_order[static_cast<std::size_t>(j)](0, 0) - 2.0 * A0(j, 0) * cd(0, q)) < 1e-14);
}

TEST_CASE("hermiticity of the potential matrix") {
  const KKBundle w = resolve_geometry("warped-su2").bundle.value();
  std::mt19937_64 rng(6);
  for (int i = 0; i < 5; ++i) {
    const Vec x = random_point(w.base_domain, rng, 0.0);
    CHECK(hermiticity_residual(matrix_hamiltonian_coeffs(w, su2_spin_half(), x).potential_matrix) < 1e-10);
    CHECK(hermiticity_residual(matrix_hamiltonian_coeffs(w, adjoint_representation(w.group.structure), x).potential_matrix) < 1e-10);
  }
}

TEST_CASE("representation mismatch is rejected") {
  const KKBundle b = resolve_geometry("hopf").bundle.value();
  CHECK_THROWS_AS(matrix_hamiltonian_coeffs(b, su2_spin_half(), vec({1.0, 1.0})), RepresentationMismatch);
}

TEST_CASE("abelian gauge covariance of the assembled operator") {
  const KKBundle b0 = u1_torus(0.0);
  const KKBundle b1 = u1_torus(1.0);
  const double q = 2.0;
  const Representation rep = u1_charge(q);
  auto chi = [](const Vec& y) { return std::sin(y[0]) * std::cos(y[1]); };
  auto psi = [](const Vec& y) { return cd(std::cos(y[0]) + 0.5, std::sin(2 * y[1])) * std::exp(0.2 * std::sin(y[0] + y[1])); };
  // A -> A + d chi, psi -> exp(-i q chi) psi
  auto psi1 = [&](const Vec& y) { return std::exp(cd(0, -q * chi(y))) * psi(y); };
  for (const Vec& x : {vec({0.4, 1.1}), vec({2.5, 4.0})}) {
    const cd lhs = apply(b1, rep, psi1, x);
    const cd rhs = std::exp(cd(0, -q * chi(x))) * apply(b0, rep, psi, x);
    CHECK(std::abs(lhs - rhs) < 1e-5);
  }
}

TEST_CASE("kappa form continues to the Schroedinger coefficients") {
  const double hbar = 1.3, m = 0.7, jt = 0.45, v = -0.2;
  const KappaForm k = continued_to_schroedinger(hbar, m, jt, v);
  CHECK(std::abs(k.laplacian - cd(-hbar * hbar / (2 * m), 0)) < 1e-14);
  CHECK(std::abs(k.zeroth - cd(hbar * hbar / (8 * m) * jt + v, 0)) < 1e-14);
  const KappaForm real = kappa_form(hbar, m, 2.0, jt, v);
  CHECK(real.laplacian.real() == doctest::Approx(hbar * 2.0 / (2 * m)));
  CHECK(real.zeroth.real() == doctest::Approx(-hbar * 2.0 / (8 * m) * jt + v / (hbar * 2.0)));
}
