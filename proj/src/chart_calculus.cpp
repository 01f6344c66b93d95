#include "kklab/chart_calculus.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "kklab/finite_difference.hpp"

namespace kklab {

Domain Domain::box(const Vec& lower, const Vec& upper) {
  Domain d;
  d.lower = lower;
  d.upper = upper;
  d.periodic.assign(static_cast<std::size_t>(lower.size()), false);
  return d;
}

Domain Domain::periodic_box(int dim, double lower, double upper) {
  Domain d;
  d.lower = Vec::Constant(dim, lower);
  d.upper = Vec::Constant(dim, upper);
  d.periodic.assign(static_cast<std::size_t>(dim), true);
  return d;
}

Domain Domain::product(const Domain& other) const {
  Domain d;
  const int n = dim() + other.dim();
  d.lower.resize(n);
  d.upper.resize(n);
  d.lower << lower, other.lower;
  d.upper << upper, other.upper;
  d.periodic = periodic;
  d.periodic.insert(d.periodic.end(), other.periodic.begin(), other.periodic.end());
  return d;
}

Vec Domain::wrap(Vec p) const {
  for (int k = 0; k < dim(); ++k) {
    if (!periodic[static_cast<std::size_t>(k)]) continue;
    const double width = upper[k] - lower[k];
    double t = std::fmod(p[k] - lower[k], width);
    if (t < 0) t += width;
    p[k] = lower[k] + t;
  }
  return p;
}

bool Domain::contains(const Vec& p, double margin) const {
  if (p.size() != dim()) return false;
  for (int k = 0; k < dim(); ++k) {
    if (periodic[static_cast<std::size_t>(k)]) continue;
    if (!(p[k] - margin > lower[k] && p[k] + margin < upper[k])) return false;
  }
  return true;
}

FDScheme FDScheme::scaled(double factor) const {
  FDScheme s = *this;
  for (double& h : s.step) h *= factor;
  return s;
}

void FDScheme::validate(const Domain& domain) const {
  if (order != 2 && order != 4) throw ConfigError("finite-difference order must be 2 or 4");
  if (step.empty() || (step.size() != 1 && static_cast<int>(step.size()) != domain.dim()))
    throw ConfigError("finite-difference step must have one entry or one per axis");
  for (int k = 0; k < domain.dim(); ++k) {
    const double extent = domain.upper[k] - domain.lower[k];
    if (!(h(k) > 0.0) || h(k) >= extent / 10.0) {
      std::ostringstream msg;
      msg << "finite-difference step " << h(k) << " on axis " << k << " is not in (0, extent/10)";
      throw ConfigError(msg.str());
    }
  }
}

std::string to_string(SignConvention c) {
  return c == SignConvention::PositiveSpheres ? "positive-spheres" : "negative-spheres";
}

SignConvention parse_convention(const std::string& name) {
  if (name == "positive-spheres" || name == "positive") return SignConvention::PositiveSpheres;
  if (name == "negative-spheres" || name == "negative") return SignConvention::NegativeSpheres;
  throw ConfigError("unknown sign convention '" + name + "'");
}

SignConvention opposite(SignConvention c) {
  return c == SignConvention::PositiveSpheres ? SignConvention::NegativeSpheres : SignConvention::PositiveSpheres;
}

Mat checked_inverse(const Mat& g, const std::string& what) {
  // PartialPivLU::rcond() is unreliable on exactly singular input, so measure the inverse directly
  Mat inv = Eigen::PartialPivLU<Mat>(g).inverse();
  const double rcond = 1.0 / (g.cwiseAbs().colwise().sum().maxCoeff() * inv.cwiseAbs().colwise().sum().maxCoeff());
  if (!inv.allFinite() || !(rcond >= 1e-12)) {
    std::ostringstream msg;
    msg << what << " is singular (reciprocal condition estimate " << rcond << ")";
    throw SingularMetric(msg.str());
  }
  return inv;
}

void require_interior(const Domain& domain, const Vec& p, const FDScheme& s, double reach_multiplier) {
  if (p.size() != domain.dim()) throw OutOfDomain("point has the wrong dimension for the chart");
  for (int k = 0; k < domain.dim(); ++k) {
    if (domain.periodic[static_cast<std::size_t>(k)]) continue;
    const double r = s.reach(k) * reach_multiplier;
    if (!(p[k] - r > domain.lower[k] && p[k] + r < domain.upper[k])) {
      std::ostringstream msg;
      msg << "stencil around coordinate " << k << " = " << p[k] << " leaves [" << domain.lower[k] << ", "
          << domain.upper[k] << "]";
      throw OutOfDomain(msg.str());
    }
  }
}

namespace {

Mat symmetric_metric_at(const ChartedMetric& m, const Vec& p) {
  Mat g = m.at(p);
  if (g.rows() != m.dim || g.cols() != m.dim) throw Error("metric '" + m.label + "' returned a matrix of the wrong size");
  const double asym = (g - g.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-14 * std::max(1.0, g.cwiseAbs().maxCoeff()))
    throw NumericalFailure("metric '" + m.label + "' is not symmetric");
  return g;
}

}  // namespace

MetricJet metric_jet(const ChartedMetric& m, const Vec& p, const FDScheme& s, bool second_derivatives) {
  require_interior(m.domain, p, s);
  const int n = m.dim;
  auto g_of = [&m](const Vec& q) -> Mat { return m.at(q); };

  MetricJet jet;
  jet.g = symmetric_metric_at(m, p);
  jet.g_inv = checked_inverse(jet.g);
  jet.dg.resize(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    Mat d = fd::first(g_of, p, c, s);
    jet.dg[static_cast<std::size_t>(c)] = 0.5 * (d + d.transpose());
  }
  if (second_derivatives) {
    jet.d2g.assign(static_cast<std::size_t>(n), std::vector<Mat>(static_cast<std::size_t>(n)));
    for (int c = 0; c < n; ++c) {
      for (int d = c; d < n; ++d) {
        Mat dd = fd::second(g_of, p, c, d, s);
        dd = 0.5 * (dd + dd.transpose());
        jet.d2g[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] = dd;
        jet.d2g[static_cast<std::size_t>(d)][static_cast<std::size_t>(c)] = dd;
      }
    }
  }
  return jet;
}

Tensor3 christoffel_from_jet(const MetricJet& jet) {
  const int n = static_cast<int>(jet.g.rows());
  Tensor3 lowered(n, n, n);  // Gamma_{E,BC}
  for (int e = 0; e < n; ++e) {
    for (int b = 0; b < n; ++b) {
      for (int c = b; c < n; ++c) {
        const double v = 0.5 * (jet.dg[static_cast<std::size_t>(b)](e, c) + jet.dg[static_cast<std::size_t>(c)](e, b) -
                                jet.dg[static_cast<std::size_t>(e)](b, c));
        lowered(e, b, c) = v;
        lowered(e, c, b) = v;
      }
    }
  }
  Tensor3 gamma(n, n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = b; c < n; ++c) {
        double v = 0.0;
        for (int e = 0; e < n; ++e) v += jet.g_inv(a, e) * lowered(e, b, c);
        gamma(a, b, c) = v;
        gamma(a, c, b) = v;
      }
    }
  }
  return gamma;
}

Tensor3 christoffel(const ChartedMetric& m, const Vec& p, const FDScheme& s) {
  return christoffel_from_jet(metric_jet(m, p, s, false));
}

CurvaturePack curvature_pack(const ChartedMetric& m, const Vec& p, const FDScheme& s, SignConvention convention) {
  const MetricJet jet = metric_jet(m, p, s, true);
  const int n = m.dim;
  const auto N = static_cast<std::size_t>(n);

  CurvaturePack pack;
  pack.convention = convention;
  pack.christoffel = christoffel_from_jet(jet);
  const Tensor3& gam = pack.christoffel;

  std::vector<Mat> dg_inv(N);
  for (std::size_t c = 0; c < N; ++c) dg_inv[c] = -jet.g_inv * jet.dg[c] * jet.g_inv;

  Tensor3 lowered(n, n, n);
  for (int e = 0; e < n; ++e)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double v = 0.0;
        for (int a = 0; a < n; ++a) v += jet.g(e, a) * gam(a, b, c);
        lowered(e, b, c) = v;
      }

  // dgam[c](a, d, b) = d_c Gamma^a_db
  std::vector<Tensor3> dgam(N, Tensor3(n, n, n));
  for (int c = 0; c < n; ++c) {
    const auto& d2c = jet.d2g[static_cast<std::size_t>(c)];
    for (int a = 0; a < n; ++a)
      for (int d = 0; d < n; ++d)
        for (int b = d; b < n; ++b) {
          double v = 0.0;
          for (int e = 0; e < n; ++e) {
            const double dlow = 0.5 * (d2c[static_cast<std::size_t>(d)](e, b) + d2c[static_cast<std::size_t>(b)](e, d) -
                                       d2c[static_cast<std::size_t>(e)](d, b));
            v += dg_inv[static_cast<std::size_t>(c)](a, e) * lowered(e, d, b) + jet.g_inv(a, e) * dlow;
          }
          dgam[static_cast<std::size_t>(c)](a, d, b) = v;
          dgam[static_cast<std::size_t>(c)](a, b, d) = v;
        }
  }

  const double sign = sign_of(convention);
  pack.riemann = Tensor4(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          double v = dgam[static_cast<std::size_t>(c)](a, d, b) - dgam[static_cast<std::size_t>(d)](a, c, b);
          for (int e = 0; e < n; ++e) v += gam(a, c, e) * gam(e, d, b) - gam(a, d, e) * gam(e, c, b);
          pack.riemann(a, b, c, d) = sign * v;
          pack.riemann(a, b, d, c) = -sign * v;
        }

  pack.ricci = Mat::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double v = 0.0;
      for (int a = 0; a < n; ++a) v += pack.riemann(a, b, a, d);
      pack.ricci(b, d) = v;
    }
  pack.scalar = (jet.g_inv.cwiseProduct(pack.ricci)).sum();
  return pack;
}

double scalar_curvature(const ChartedMetric& m, const Vec& p, const FDScheme& s, SignConvention convention) {
  return curvature_pack(m, p, s, convention).scalar;
}

Vec fd_gradient(const ScalarField& f, const Vec& p, const FDScheme& s) {
  Vec grad(p.size());
  for (int k = 0; k < p.size(); ++k) grad[k] = fd::first(f, p, k, s);
  return grad;
}

Mat fd_partial(const MatrixField& f, const Vec& p, int axis, const FDScheme& s) {
  return fd::first(f, p, axis, s);
}

double laplace_beltrami(const ChartedMetric& m, const ScalarField& f, const Vec& p, const FDScheme& s) {
  require_interior(m.domain, p, s, 2.0);
  const int n = m.dim;
  auto wrapped_f = [&](const Vec& q) { return f(m.domain.wrap(q)); };
  auto flux = [&](const Vec& q) -> Vec {
    const Mat g = m.at(q);
    const Mat g_inv = checked_inverse(g);
    const double vol = std::sqrt(g.determinant());
    return vol * (g_inv * fd_gradient(wrapped_f, q, s));
  };
  double div = 0.0;
  for (int a = 0; a < n; ++a) {
    auto component = [&](const Vec& q) { return flux(q)[a]; };
    div += fd::first(component, p, a, s);
  }
  const Mat g = m.at(p);
  const double det = g.determinant();
  if (!(det > 0.0)) throw SingularMetric("metric determinant is not positive in laplace_beltrami");
  return div / std::sqrt(det);
}

}  // namespace kklab
