#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "kklab/catalog.hpp"
#include "kklab/kk_geometry.hpp"

using namespace kklab;
using testutil::vec;
using std::numbers::pi;

namespace {

const char* kBundles[] = {"hopf", "trivial-su2-product", "trivial-u1-product(2)", "warped-su2", "warped-u1-line",
                          "warped-u1-line(1,2)"};

// U(1) over the flat 2-torus with nonconstant gamma and A; `chi` adds the gradient of a gauge function.
KKBundle u1_torus_bundle(bool gauge_shift) {
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
  b.gamma = [](const Vec& x) { return Mat::Constant(1, 1, std::exp(0.3 * std::cos(x[0]) + 0.2 * std::sin(x[1]))); };
  b.A = [gauge_shift](const Vec& x) {
    Mat a(2, 1);
    a << 0.4 * std::sin(x[1]), 0.3 * std::cos(x[0]);
    if (gauge_shift) {  // chi = sin(x) cos(y)
      a(0, 0) += std::cos(x[0]) * std::cos(x[1]);
      a(1, 0) += -std::sin(x[0]) * std::sin(x[1]);
    }
    return a;
  };
  return b;
}

// SU(2) over a flat 2-torus with gamma = identity and a nontrivial A.
KKBundle su2_identity_gamma() {
  KKBundle b = resolve_geometry("warped-su2").bundle.value();
  b.gamma = [](const Vec&) -> Mat { return Mat::Identity(3, 3); };
  return b;
}

// the warped lines get badly conditioned far out, so stay near the origin there
Vec random_base_point(const KKBundle& b, std::mt19937_64& rng) {
  Domain d = b.base_domain;
  for (int k = 0; k < d.dim(); ++k) {
    if (d.periodic[static_cast<std::size_t>(k)]) continue;
    d.lower[k] = std::max(d.lower[k], -2.0);
    d.upper[k] = std::min(d.upper[k], 2.0);
  }
  return random_point(d, rng, 0.3);
}

}  // namespace

TEST_CASE("assembled metric is block diagonal for product data") {
  const KKBundle b = resolve_geometry("trivial-u1-product(2, 3.0)").bundle.value();
  const Mat G = assemble_kk_metric(b).at(vec({1.0, 2.0, 0.5}));
  Mat expected = Mat::Identity(3, 3);
  expected(2, 2) = 3.0;
  CHECK(testutil::max_abs(G - expected) == 0.0);
}

TEST_CASE("determinant identity on every catalog bundle") {
  std::mt19937_64 rng(9);
  for (const char* name : kBundles) {
    const KKBundle b = resolve_geometry(name).bundle.value();
    const ChartedMetric G = assemble_kk_metric(b);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vec q = random_point(G.domain, rng, 0.0);
      const Vec x = q.head(b.base_dim), a = q.tail(b.fibre_dim());
      const double du = b.group.chart.u_bar(a).determinant();
      const double rhs = b.h(x).determinant() * b.gamma(x).determinant() * du * du;
      worst = std::max(worst, std::abs(G.at(q).determinant() / rhs - 1.0));
    }
    INFO(name);
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("hopf total space is the unit round 3-sphere") {
  // embedding z1 = cos(th/2) e^{i(a + ph/2)}, z2 = sin(th/2) e^{i(a - ph/2)}
  auto embed = [](const Vec& q) {
    const double th = q[0], ph = q[1], a = q[2];
    Eigen::Vector4d z;
    z << std::cos(th / 2) * std::cos(a + ph / 2), std::cos(th / 2) * std::sin(a + ph / 2),
        std::sin(th / 2) * std::cos(a - ph / 2), std::sin(th / 2) * std::sin(a - ph / 2);
    return z;
  };
  const KKBundle b = resolve_geometry("hopf").bundle.value();
  const ChartedMetric G = assemble_kk_metric(b);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 5; ++i) {
    const Vec q = random_point(G.domain, rng, 0.1);
    Eigen::Matrix<double, 4, 3> jac;
    for (int k = 0; k < 3; ++k) {
      Vec p = q, m = q;
      p[k] += 1e-6;
      m[k] -= 1e-6;
      jac.col(k) = (embed(p) - embed(m)) / 2e-6;
    }
    const Mat pullback = jac.transpose() * jac;
    CHECK(testutil::max_abs(G.at(q) - pullback) < 1e-8);
    CHECK(scalar_curvature(G, q) == doctest::Approx(6.0).epsilon(1e-6));
  }
}

TEST_CASE("field strength") {
  // constant non-abelian A: F = c A A
  KKBundle b = su2_identity_gamma();
  Mat A0(2, 3);
  A0 << 0.3, -0.2, 0.5, 0.1, 0.4, -0.6;
  b.A = [A0](const Vec&) { return A0; };
  const Vec x = vec({1.0, 2.0});
  const Tensor3 F = field_strength(b, x);
  for (int i = 0; i < 2; ++i)
    for (int m = 0; m < 2; ++m)
      for (int al = 0; al < 3; ++al) {
        double expected = 0.0;
        for (int mu = 0; mu < 3; ++mu)
          for (int nu = 0; nu < 3; ++nu) expected += b.group.structure.c(al, mu, nu) * A0(i, mu) * A0(m, nu);
        CHECK(F(i, m, al) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(F(i, m, al) == -F(m, i, al));
      }
  // Hopf: F_{th ph} = d_th (cos th / 2) = -sin th / 2
  const KKBundle h = resolve_geometry("hopf").bundle.value();
  const Tensor3 Fh = field_strength(h, vec({1.1, 0.4}));
  CHECK(Fh(0, 1, 0) == doctest::Approx(-0.5 * std::sin(1.1)).epsilon(1e-10));
  CHECK(Fh(0, 0, 0) == 0.0);
  // constant abelian A
  const KKBundle t = resolve_geometry("trivial-u1-product(2)").bundle.value();
  const Tensor3 Ft = field_strength(t, vec({1.0, 1.0}));
  for (double v : Ft.data()) CHECK(v == 0.0);
}

TEST_CASE("covariant derivative of gamma") {
  // identity gamma: the two structure-constant terms cancel for any A
  const KKBundle b = su2_identity_gamma();
  const Tensor3 Db = covariant_D_gamma(b, vec({0.7, 2.5}));
  for (double v : Db.data()) CHECK(std::abs(v) < 1e-12);
  // gamma = exp(2 eps x): D gamma = 2 eps gamma
  const KKBundle w = resolve_geometry("warped-u1-line(0.3)").bundle.value();
  const Tensor3 D = covariant_D_gamma(w, vec({1.2}));
  CHECK(D(0, 0, 0) == doctest::Approx(0.6 * std::exp(0.72)).epsilon(1e-9));
  // symmetry in the fibre indices
  const KKBundle s = resolve_geometry("warped-su2").bundle.value();
  const Tensor3 Ds = covariant_D_gamma(s, vec({0.3, 4.0}));
  for (int i = 0; i < 2; ++i)
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n) CHECK(Ds(i, m, n) == Ds(i, n, m));
}

TEST_CASE("second fundamental form: reduced and ambient routes") {
  const KKBundle w = resolve_geometry("warped-u1-line(1)").bundle.value();
  const Vec x = vec({0.4});
  CHECK(second_fundamental_form(w, x)(0, 0, 0) == doctest::Approx(-std::exp(0.8)).epsilon(1e-9));

  std::mt19937_64 rng(21);
  for (const char* name : kBundles) {
    const KKBundle b = resolve_geometry(name).bundle.value();
    for (int i = 0; i < 3; ++i) {
      const Vec p = random_base_point(b, rng);
      const Tensor3 jr = second_fundamental_form(b, p);
      const AmbientSecondFundamentalForm ja = second_fundamental_form_ambient(b, p);
      double diff = 0.0;
      for (std::size_t k = 0; k < jr.data().size(); ++k) diff = std::max(diff, std::abs(jr.data()[k] - ja.j.data()[k]));
      INFO(name);
      CHECK(diff < 1e-6);
      CHECK(testutil::max_abs(ja.orbit_metric - b.gamma(p)) < 1e-10);
    }
  }
  const KKBundle t = resolve_geometry("trivial-su2-product").bundle.value();
  const AmbientSecondFundamentalForm jt = second_fundamental_form_ambient(t, vec({1.0, 3.0}));
  for (double v : jt.j.data()) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("jacobian: analytic values") {
  const KKBundle c = resolve_geometry("trivial-su2-product").bundle.value();
  CHECK(jacobian_direct(c, vec({1.0, 1.0})).j_tilde == 0.0);
  const KKBundle e1 = resolve_geometry("warped-u1-line(1,1)").bundle.value();
  const KKBundle e2 = resolve_geometry("warped-u1-line(1,2)").bundle.value();
  for (double x : {-1.3, 0.0, 0.4, 2.0}) {
    CHECK(jacobian_direct(e1, vec({x})).j_tilde == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(jacobian_direct(e2, vec({x})).j_tilde == doctest::Approx(4.0 + 4.0 * x * x).epsilon(1e-6));
    CHECK(jacobian_from_jet(e2, vec({x})).j_tilde == doctest::Approx(4.0 + 4.0 * x * x).epsilon(1e-6));
  }
  PhysicalParams p;
  p.hbar = 2.0;
  p.m = 0.5;
  p.kappa = 0.7;
  const JacobianValue v = jacobian_direct(e1, vec({0.2}), {}, p);
  CHECK(v.jacobian == doctest::Approx(-4.0 * 0.7 / 8.0 * v.j_tilde).epsilon(1e-14));
}

TEST_CASE("jacobian: geometric route") {
  const KKBundle prod = resolve_geometry("trivial-su2-product").bundle.value();
  CHECK(std::abs(jacobian_geometric(prod, vec({1.0, 2.0}))) < 1e-7);
  const KKBundle hopf = resolve_geometry("hopf").bundle.value();
  CHECK(std::abs(jacobian_geometric(hopf, vec({1.2, 0.5}))) < 1e-5);

  std::mt19937_64 rng(8);
  for (const char* name : {"warped-su2", "warped-u1-line", "warped-u1-line(1,2)"}) {
    const KKBundle b = resolve_geometry(name).bundle.value();
    for (int i = 0; i < 3; ++i) {
      const Vec x = name[7] == 's' ? random_base_point(b, rng) : vec({-1.0 + i});
      INFO(name);
      CHECK(jacobian_geometric(b, x) == doctest::Approx(jacobian_direct(b, x).j_tilde).epsilon(1e-4));
      CHECK(jacobian_from_jet(b, x).j_tilde == doctest::Approx(jacobian_direct(b, x).j_tilde).epsilon(1e-6));
    }
  }
}

TEST_CASE("decomposition: constant data gives zeros") {
  const KKBundle b = resolve_geometry("trivial-u1-product(2)").bundle.value();
  const DecompositionReport r = decomposition_report(b, vec({1.0, 5.0}));
  for (double v : {r.R_P, r.R_M, r.R_G, r.F2_term, r.Dgamma2_term, r.j_norm2, r.J_tilde_direct, r.residual,
                   r.remark_residual})
    CHECK(std::abs(v) < 1e-8);
}

TEST_CASE("decomposition: hopf magnitudes and both conventions") {
  const KKBundle b = resolve_geometry("hopf").bundle.value();
  const DecompositionReport pos = decomposition_report(b, vec({1.0, 0.3}), {}, SignConvention::PositiveSpheres);
  CHECK(pos.R_P == doctest::Approx(6.0).epsilon(1e-6));
  CHECK(pos.R_M == doctest::Approx(8.0).epsilon(1e-6));
  CHECK(pos.R_G == 0.0);
  CHECK(pos.F2_term == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(pos.j_norm2 == 0.0);
  CHECK(std::abs(pos.remark_residual) < 1e-5);
  const DecompositionReport neg = decomposition_report(b, vec({1.0, 0.3}), {}, SignConvention::NegativeSpheres);
  CHECK(std::abs(neg.residual) < 1e-5);
  CHECK(neg.R_P == doctest::Approx(-6.0).epsilon(1e-6));
}

TEST_CASE("decomposition: warped su2 closes in exactly one convention") {
  const KKBundle b = resolve_geometry("warped-su2").bundle.value();
  std::mt19937_64 rng(12);
  for (int i = 0; i < 3; ++i) {
    const Vec x = random_base_point(b, rng);
    const DecompositionReport neg = decomposition_report(b, x, {}, SignConvention::NegativeSpheres);
    const DecompositionReport pos = decomposition_report(b, x, {}, SignConvention::PositiveSpheres);
    CHECK(std::abs(neg.residual) < 1e-4);
    CHECK(std::abs(pos.residual) > 1e-2);
    CHECK(std::abs(pos.remark_residual) < 1e-4);
    CHECK(pos.Dgamma2_term >= 0.0);
    CHECK(pos.Dgamma2_term == doctest::Approx(pos.j_norm2).epsilon(1e-10));
    CHECK(pos.J_tilde_direct == doctest::Approx(pos.J_tilde_geometric).epsilon(1e-4));
    // the horizontal-lift-basis form of the gamma-derivative lines
    const GammaDerivativeTerms t = gamma_derivative_terms(b, x);
    CHECK(t.lift_basis_tail == doctest::Approx(t.dgamma2 + t.line2 + t.line3).epsilon(1e-6));
  }
}

TEST_CASE("abelian gauge shift leaves the invariants unchanged") {
  const KKBundle b0 = u1_torus_bundle(false);
  const KKBundle b1 = u1_torus_bundle(true);
  for (const Vec& x : {vec({0.5, 1.5}), vec({3.0, 5.5})}) {
    const Tensor3 F0 = field_strength(b0, x), F1 = field_strength(b1, x);
    for (std::size_t k = 0; k < F0.data().size(); ++k) CHECK(F1.data()[k] == doctest::Approx(F0.data()[k]).epsilon(1e-8));
    const Tensor3 D0 = covariant_D_gamma(b0, x), D1 = covariant_D_gamma(b1, x);
    for (std::size_t k = 0; k < D0.data().size(); ++k) CHECK(D1.data()[k] == doctest::Approx(D0.data()[k]).epsilon(1e-10));
    const DecompositionReport r0 = decomposition_report(b0, x), r1 = decomposition_report(b1, x);
    CHECK(r1.R_P == doctest::Approx(r0.R_P).epsilon(1e-6));
    CHECK(r1.F2_term == doctest::Approx(r0.F2_term).epsilon(1e-8));
    CHECK(r1.j_norm2 == doctest::Approx(r0.j_norm2).epsilon(1e-8));
    CHECK(r1.J_tilde_direct == doctest::Approx(r0.J_tilde_direct).epsilon(1e-8));
    CHECK(r1.J_tilde_geometric == doctest::Approx(r0.J_tilde_geometric).epsilon(1e-5));
    CHECK(std::abs(r1.remark_residual) < 1e-5);
  }
}

TEST_CASE("stencils must stay inside the base chart") {
  const KKBundle b = resolve_geometry("hopf").bundle.value();
  CHECK_THROWS_AS(jacobian_direct(b, vec({kHopfPatchMargin + 1e-4, 1.0})), OutOfDomain);
}
