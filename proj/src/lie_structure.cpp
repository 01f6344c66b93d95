#include "kklab/lie_structure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gsl/gsl_integration.h>

namespace kklab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat cross_matrix(const Vec& a) {
  Mat k = Mat::Zero(3, 3);
  k(0, 1) = -a[2];
  k(0, 2) = a[1];
  k(1, 0) = a[2];
  k(1, 2) = -a[0];
  k(2, 0) = -a[1];
  k(2, 1) = a[0];
  return k;
}

// (1 - cos r) / r^2
double coef_one_minus_cos(double r) {
  if (r < 1e-8) return 0.5;
  const double s = std::sin(0.5 * r);
  return 2.0 * s * s / (r * r);
}

// (r - sin r) / r^3
double coef_r_minus_sin(double r) {
  if (r < 0.05) {
    const double r2 = r * r;
    return 1.0 / 6.0 - r2 / 120.0 + r2 * r2 / 5040.0 - r2 * r2 * r2 / 362880.0;
  }
  return (r - std::sin(r)) / (r * r * r);
}

// (1 - (r/2) cot(r/2)) / r^2
double coef_inverse_dexp(double r) {
  if (r < 0.05) {
    const double r2 = r * r;
    return 1.0 / 12.0 + r2 / 720.0 + r2 * r2 / 30240.0;
  }
  const double h = 0.5 * r;
  return (1.0 - h * std::cos(h) / std::sin(h)) / (r * r);
}

double sin_over(double r) { return r < 1e-8 ? 1.0 : std::sin(r) / r; }

struct Quaternion {
  double w, x, y, z;
};

Quaternion quat_of(const Vec& a) {
  const double r = a.norm();
  const double s = 0.5 * sin_over(0.5 * r);  // sin(r/2) / r
  return {std::cos(0.5 * r), s * a[0], s * a[1], s * a[2]};
}

Quaternion operator*(const Quaternion& p, const Quaternion& q) {
  return {p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z, p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
          p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x, p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w};
}

Vec log_of(const Quaternion& q) {
  const double s = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  Vec a(3);
  if (s < 1e-300) {
    a.setZero();
    return a;
  }
  const double r = 2.0 * std::atan2(s, q.w);
  a << q.x, q.y, q.z;
  return a * (r / s);
}

// Fejer-weighted sum of spin characters, sum_l (1 - l/(L+1)) (l+1) chi_l.
double su2_fejer(double cos_half_angle, int order) {
  const double w = std::clamp(cos_half_angle, -1.0, 1.0);
  // chi_l(w) = U_l(w), Chebyshev polynomials of the second kind.
  double u_prev = 1.0;
  double u = 2.0 * w;
  double sum = 1.0;
  for (int l = 1; l <= order; ++l) {
    const double weight = 1.0 - static_cast<double>(l) / (order + 1);
    sum += weight * (l + 1) * u;
    const double next = 2.0 * w * u - u_prev;
    u_prev = u;
    u = next;
  }
  return sum;
}

double circle_fejer(double angle, int order) {
  double sum = 1.0;
  for (int m = 1; m <= order; ++m) sum += 2.0 * (1.0 - static_cast<double>(m) / (order + 1)) * std::cos(m * angle);
  return sum;
}

std::vector<std::pair<double, double>> gauss_legendre(int n, double a, double b) {
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n));
  std::vector<std::pair<double, double>> rule(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = 0.0;
    double w = 0.0;
    gsl_integration_glfixed_point(a, b, static_cast<std::size_t>(i), &x, &w, table);
    rule[static_cast<std::size_t>(i)] = {x, w};
  }
  gsl_integration_glfixed_table_free(table);
  return rule;
}

}  // namespace

LieStructure::LieStructure(Tensor3 constants, std::string label)
    : dim_(constants.extent(0)), c_(std::move(constants)), label_(std::move(label)) {
  for (int a = 0; a < dim_; ++a)
    for (int m = 0; m < dim_; ++m)
      for (int n = 0; n < dim_; ++n)
        if (c_(a, m, n) != -c_(a, n, m)) throw Error("structure constants of '" + label_ + "' are not antisymmetric");
  if (jacobi_residual() > 1e-12) throw Error("structure constants of '" + label_ + "' violate the Jacobi identity");
  if (unimodularity_residual() > 1e-12) throw Error("Lie algebra '" + label_ + "' is not unimodular");
}

bool LieStructure::is_abelian() const {
  for (double v : c_.data())
    if (v != 0.0) return false;
  return true;
}

double LieStructure::jacobi_residual() const {
  double worst = 0.0;
  for (int a = 0; a < dim_; ++a)
    for (int b = 0; b < dim_; ++b)
      for (int m = 0; m < dim_; ++m)
        for (int n = 0; n < dim_; ++n) {
          double v = 0.0;
          for (int s = 0; s < dim_; ++s)
            v += c_(a, b, s) * c_(s, m, n) + c_(a, m, s) * c_(s, n, b) + c_(a, n, s) * c_(s, b, m);
          worst = std::max(worst, std::abs(v));
        }
  return worst;
}

double LieStructure::unimodularity_residual() const {
  double worst = 0.0;
  for (int m = 0; m < dim_; ++m) {
    double v = 0.0;
    for (int k = 0; k < dim_; ++k) v += c_(k, m, k);
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

Mat LieStructure::ad(const Vec& a) const {
  Mat k = Mat::Zero(dim_, dim_);
  for (int m = 0; m < dim_; ++m)
    for (int n = 0; n < dim_; ++n)
      for (int al = 0; al < dim_; ++al) k(m, n) += c_(m, al, n) * a[al];
  return k;
}

LieGroup build_su2() {
  Tensor3 c(3, 3, 3);
  c(0, 1, 2) = 1.0;
  c(0, 2, 1) = -1.0;
  c(1, 2, 0) = 1.0;
  c(1, 0, 2) = -1.0;
  c(2, 0, 1) = 1.0;
  c(2, 1, 0) = -1.0;

  GroupChart gc;
  gc.kind = GroupKind::SU2;
  gc.dim = 3;
  gc.coords_at_identity = Vec::Zero(3);
  // Box inscribed in the injectivity ball |a| < 2 pi.
  gc.domain = Domain::box(Vec::Constant(3, -3.6), Vec::Constant(3, 3.6));
  gc.u_bar = [](const Vec& a) -> Mat {
    const double r = a.norm();
    const Mat k = cross_matrix(a);
    return Mat::Identity(3, 3) + coef_one_minus_cos(r) * k + coef_r_minus_sin(r) * k * k;
  };
  gc.v_bar = [](const Vec& a) -> Mat {
    const double r = a.norm();
    const Mat k = cross_matrix(a);
    return Mat::Identity(3, 3) - 0.5 * k + coef_inverse_dexp(r) * k * k;
  };
  gc.rho = [](const Vec& a) -> Mat {
    const double r = a.norm();
    const Mat k = cross_matrix(a);
    return Mat::Identity(3, 3) + sin_over(r) * k + coef_one_minus_cos(r) * k * k;
  };
  gc.composition = [](const Vec& a, const Vec& b) { return log_of(quat_of(a) * quat_of(b)); };
  gc.inverse = [](const Vec& a) -> Vec { return -a; };
  gc.unit_volume = 16.0 * kPi * kPi;
  gc.relative_mollifier = [](const Vec& theta, const Vec& a, int order) {
    const Quaternion p = quat_of(theta);
    const Quaternion q = quat_of(a);
    // Real part of conj(p) q is the cosine of the half class angle of theta^{-1} a.
    return su2_fejer(p.w * q.w + p.x * q.x + p.y * q.y + p.z * q.z, order);
  };
  return {LieStructure(std::move(c), "su2"), std::move(gc)};
}

LieGroup build_abelian(int n) {
  if (n < 1) throw ConfigError("abelian group needs n >= 1");
  GroupChart gc;
  gc.kind = GroupKind::Torus;
  gc.dim = n;
  gc.coords_at_identity = Vec::Zero(n);
  gc.domain = Domain::periodic_box(n, 0.0, kTwoPi);
  gc.u_bar = [n](const Vec&) -> Mat { return Mat::Identity(n, n); };
  gc.v_bar = gc.u_bar;
  gc.rho = gc.u_bar;
  gc.composition = [](const Vec& a, const Vec& b) -> Vec {
    Vec c = a + b;
    for (int k = 0; k < c.size(); ++k) {
      c[k] = std::fmod(c[k], kTwoPi);
      if (c[k] < 0) c[k] += kTwoPi;
    }
    return c;
  };
  gc.inverse = [](const Vec& a) -> Vec {
    Vec c = -a;
    for (int k = 0; k < c.size(); ++k)
      if (c[k] < 0) c[k] += kTwoPi;
    return c;
  };
  gc.unit_volume = std::pow(kTwoPi, n);
  gc.relative_mollifier = [](const Vec& theta, const Vec& a, int order) {
    double k = 1.0;
    for (int i = 0; i < a.size(); ++i) k *= circle_fejer(a[i] - theta[i], order);
    return k;
  };
  std::ostringstream label;
  label << (n == 1 ? "u1" : "torus" + std::to_string(n));
  return {LieStructure(Tensor3(n, n, n), label.str()), std::move(gc)};
}

double orbit_scalar_curvature(const LieStructure& ls, const Mat& gamma, SignConvention convention) {
  const int n = ls.dim();
  if (gamma.rows() != n || gamma.cols() != n) throw Error("orbit metric has the wrong size");
  const Mat gi = checked_inverse(gamma, "orbit metric");
  double first = 0.0;
  for (int m = 0; m < n; ++m)
    for (int nu = 0; nu < n; ++nu) {
      if (gi(m, nu) == 0.0) continue;
      double v = 0.0;
      for (int s = 0; s < n; ++s)
        for (int a = 0; a < n; ++a) v += ls.c(s, m, a) * ls.c(a, nu, s);
      first += gi(m, nu) * v;
    }
  // second = 1/4 gamma_{mu sigma} gamma^{alpha beta} gamma^{eps nu} c^mu_{eps alpha} c^sigma_{nu beta}
  double second = 0.0;
  for (int m = 0; m < n; ++m)
    for (int s = 0; s < n; ++s)
      for (int e = 0; e < n; ++e)
        for (int a = 0; a < n; ++a) {
          const double cm = ls.c(m, e, a);
          if (cm == 0.0) continue;
          for (int nu = 0; nu < n; ++nu)
            for (int b = 0; b < n; ++b) second += gamma(m, s) * gi(a, b) * gi(e, nu) * cm * ls.c(s, nu, b);
        }
  const double closed_form = 0.5 * first + 0.25 * second;
  return convention == SignConvention::NegativeSpheres ? closed_form : -closed_form;
}

double HaarQuadrature::integrate(const std::function<double(const Vec&)>& f) const {
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double term = weights[i] * f(nodes[i]);
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

double HaarQuadrature::weight_sum() const {
  return integrate([](const Vec&) { return 1.0; });
}

HaarQuadrature haar_quadrature(const GroupChart& gc, int resolution) {
  if (resolution < 1) throw ConfigError("Haar quadrature resolution must be positive");
  HaarQuadrature q;
  if (gc.kind == GroupKind::SU2) {
    const auto radial = gauss_legendre(resolution, 0.0, kTwoPi);
    const auto polar = gauss_legendre(resolution, -1.0, 1.0);
    const int n_az = 2 * resolution;
    for (const auto& [r, wr] : radial) {
      const double s = std::sin(0.5 * r);
      const double radial_weight = wr * 4.0 * s * s;
      for (const auto& [ct, wt] : polar) {
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int k = 0; k < n_az; ++k) {
          const double phi = kTwoPi * (k + 0.5) / n_az;
          Vec a(3);
          a << r * st * std::cos(phi), r * st * std::sin(phi), r * ct;
          q.nodes.push_back(a);
          q.weights.push_back(radial_weight * wt * kTwoPi / n_az);
        }
      }
    }
  } else {
    const int n = gc.dim;
    std::size_t total = 1;
    for (int k = 0; k < n; ++k) total *= static_cast<std::size_t>(resolution);
    for (std::size_t idx = 0; idx < total; ++idx) {
      Vec a(n);
      std::size_t rest = idx;
      for (int k = 0; k < n; ++k) {
        a[k] = kTwoPi * static_cast<double>(rest % static_cast<std::size_t>(resolution)) / resolution;
        rest /= static_cast<std::size_t>(resolution);
      }
      q.nodes.push_back(a);
      q.weights.push_back(1.0);
    }
  }
  double total_weight = 0.0;
  for (double w : q.weights) total_weight += w;
  for (double& w : q.weights) w /= total_weight;
  return q;
}

Mat killing_vectors_adapted(const GroupChart& gc, const Vec& a) {
  if (a.size() != gc.dim || !gc.domain.contains(a)) throw OutOfDomain("group point outside the chart");
  return gc.v_bar(a) * gc.rho(a);
}

double su2_character(double spin, const Vec& a) {
  const double r = a.norm();
  const int l = static_cast<int>(std::lround(2.0 * spin));
  const double s = std::sin(0.5 * r);
  if (std::abs(s) < 1e-12) return (l + 1) * std::pow(std::cos(0.5 * r) >= 0 ? 1.0 : -1.0, l);
  return std::sin(0.5 * (l + 1) * r) / s;
}

}  // namespace kklab
