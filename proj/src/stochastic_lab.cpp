#include "kklab/stochastic_lab.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace kklab {

namespace {

// Neumaier's variant of Kahan summation.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct LocalCoefficients {
  Vec drift;
  Mat frame;
};

// Drift from the metric derivatives:
//   G^{-1/2} d_B(G^{1/2} G^{AB}) = 1/2 tr(G^-1 d_B G) G^{AB} - (G^-1 d_B G G^-1)^{AB}
Vec drift_from(const SDESpec& spec, const Vec& p, const Mat& g_inv) {
  const int n = spec.metric.dim;
  const double h = spec.drift_step;
  Vec v = Vec::Zero(n);
  for (int b = 0; b < n; ++b) {
    Vec q = p;
    q[b] = p[b] + h;
    const Mat gp = spec.metric.at(q);
    q[b] = p[b] - h;
    const Mat gm = spec.metric.at(q);
    const Mat m = g_inv * ((gp - gm) / (2.0 * h));
    const double half_trace = 0.5 * m.trace();
    const Vec col = m * g_inv.col(b);
    v += half_trace * g_inv.col(b) - col;
  }
  return 0.5 * spec.params.diffusion() * v;
}

Mat symmetric_root_of_inverse(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  if (es.info() != Eigen::Success) throw SingularMetric("eigen-decomposition of metric failed");
  const Vec& ev = es.eigenvalues();
  if (ev.minCoeff() <= 1e-14 * std::max(1.0, ev.maxCoeff())) throw SingularMetric("metric is not positive definite");
  Vec s(ev.size());
  for (int i = 0; i < ev.size(); ++i) s[i] = 1.0 / std::sqrt(ev[i]);
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

LocalCoefficients local_coefficients(const SDESpec& spec, const Vec& p) {
  const Mat g = spec.metric.at(p);
  LocalCoefficients lc;
  if (spec.frame == FrameKind::Symmetric) {
    lc.frame = symmetric_root_of_inverse(g);
    lc.drift = drift_from(spec, p, lc.frame * lc.frame);
    return lc;
  }
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) throw SingularMetric("metric is not positive definite");
  // G = L L^T  =>  X = L^{-T} has X X^T = G^{-1}
  const Mat l_inv = llt.matrixL().solve(Mat::Identity(g.rows(), g.cols()));
  lc.frame = l_inv.transpose();
  lc.drift = drift_from(spec, p, lc.frame * l_inv);
  return lc;
}

int step_count(double t_a, double t_b, double dt) {
  if (!(dt > 0.0) || !(t_b > t_a)) throw ConfigError("need dt > 0 and t_b > t_a");
  const double n = (t_b - t_a) / dt;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n)) throw ConfigError("dt must divide t_b - t_a");
  return static_cast<int>(rounded);
}

}  // namespace

Mat metric_sqrt_frame(const ChartedMetric& m, const Vec& p) { return symmetric_root_of_inverse(m.at(p)); }

Mat diffusion_frame(const SDESpec& spec, const Vec& p) { return local_coefficients(spec, p).frame; }

Vec sde_drift(const SDESpec& spec, const Vec& p) {
  return drift_from(spec, p, checked_inverse(spec.metric.at(p)));
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

PathResult euler_maruyama_path(const SDESpec& spec, const Vec& start, double t_a, double t_b, double dt,
                               std::uint64_t seed, bool record) {
  const int n_steps = step_count(t_a, t_b, dt);
  const int n = spec.metric.dim;
  const Domain& dom = spec.metric.domain;
  if (start.size() != n) throw ConfigError("start point has wrong dimension");
  if (!dom.contains(start)) throw OutOfDomain("start point outside the chart");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double noise = std::sqrt(spec.params.diffusion() * dt);
  const double v_scale = 1.0 / (spec.params.diffusion() * spec.params.m);

  PathResult out;
  Vec eta = dom.wrap(start);
  if (record) out.trace.push_back(eta);
  CompensatedSum log_w;
  Vec xi(n);
  for (int k = 0; k < n_steps; ++k) {
    double rate = 0.0;
    if (spec.potential) rate += spec.potential(eta) * v_scale;
    if (spec.jacobian) rate += spec.jacobian(eta);
    log_w.add(rate * dt);

    const LocalCoefficients lc = local_coefficients(spec, eta);
    for (int i = 0; i < n; ++i) xi[i] = normal(rng);
    eta += lc.drift * dt + noise * (lc.frame * xi);
    if (!dom.contains(eta)) throw ChartExit("path left the chart at step " + std::to_string(k + 1));
    eta = dom.wrap(eta);
    if (record) out.trace.push_back(eta);
  }
  out.end = eta;
  out.steps = n_steps;
  out.log_weight = log_w.value();
  return out;
}

std::vector<double> simulate_observable(const SDESpec& spec, const Vec& start, const EnsembleOptions& opt,
                                        const std::function<double(const Vec&)>& observable) {
  if (opt.n_paths < 1) throw ConfigError("n_paths must be positive");
  step_count(opt.t_a, opt.t_b, opt.dt);
  const int n = opt.n_paths;
  std::vector<double> values(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());

  auto run_block = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      try {
        const PathResult r = euler_maruyama_path(spec, start, opt.t_a, opt.t_b, opt.dt,
                                                 stream_seed(opt.seed, static_cast<std::uint64_t>(i)));
        values[static_cast<std::size_t>(i)] = std::exp(r.log_weight) * observable(r.end);
      } catch (const ChartExit&) {
        // discarded; stays NaN
      } catch (const OutOfDomain&) {
        // a finite-difference stencil of the weight reached the chart edge
      }
    }
  };

  const int workers = std::max(1, std::min(opt.workers, n));
  if (workers == 1) {
    run_block(0, n);
    return values;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, w, begin, end] {
      try {
        run_block(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return values;
}

SampleMean sample_mean(const std::vector<double>& values) {
  SampleMean s;
  CompensatedSum sum;
  for (double v : values) {
    if (std::isnan(v)) {
      ++s.discarded;
      continue;
    }
    sum.add(v);
    ++s.used;
  }
  if (s.used == 0) throw InsufficientPaths("every path was discarded");
  s.mean = sum.value() / s.used;
  if (!std::isfinite(s.mean)) throw NumericalFailure("non-finite Monte Carlo mean");
  CompensatedSum sq;
  for (double v : values)
    if (!std::isnan(v)) sq.add((v - s.mean) * (v - s.mean));
  s.std_error = s.used > 1 ? std::sqrt(sq.value() / (s.used - 1) / s.used) : 0.0;
  return s;
}

double chart_gaussian(const Domain& d, const Vec& p, const Vec& centre, double width) {
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * width);
  double value = 1.0;
  for (int k = 0; k < p.size(); ++k) {
    const double diff = p[k] - centre[k];
    if (d.periodic[static_cast<std::size_t>(k)]) {
      const double period = d.upper[k] - d.lower[k];
      const double base = diff - period * std::round(diff / period);
      double s = 0.0;
      for (int image = -1; image <= 1; ++image) {
        const double z = (base + image * period) / width;
        s += std::exp(-0.5 * z * z);
      }
      value *= norm * s;
    } else {
      const double z = diff / width;
      value *= norm * std::exp(-0.5 * z * z);
    }
  }
  return value;
}

double default_smoothing_width(const PhysicalParams& p, double dt) { return 3.0 * std::sqrt(p.diffusion() * dt); }

KernelEstimate feynman_kac_kernel(const SDESpec& spec, const Vec& x_a, const Vec& x_b, const EnsembleOptions& opt,
                                  double smoothing_width) {
  if (!(smoothing_width > 0.0)) throw ConfigError("smoothing_width must be positive");
  if (opt.n_paths < 100) throw ConfigError("n_paths must be at least 100");
  const Domain& dom = spec.metric.domain;
  // delta against the Riemannian volume: bump / sqrt(G)
  auto bump = [&](const Vec& q) {
    return chart_gaussian(dom, q, x_b, smoothing_width) / std::sqrt(spec.metric.at(q).determinant());
  };
  const SampleMean s = sample_mean(simulate_observable(spec, x_a, opt, bump));
  KernelEstimate k;
  k.value = s.mean;
  k.std_error = s.std_error;
  k.n_paths = s.used + s.discarded;
  k.n_discarded = s.discarded;
  k.time_step = opt.dt;
  k.start = x_a;
  k.end = x_b;
  k.t_a = opt.t_a;
  k.t_b = opt.t_b;
  k.smoothing_width = smoothing_width;
  return k;
}

ReductionCheck reduction_check(const KKBundle& b, const Vec& x_a, const Vec& x_b, const ReductionOptions& opt,
                               const PhysicalParams& params) {
  if (x_a.size() != b.base_dim || x_b.size() != b.base_dim) throw ConfigError("endpoints must be base points");
  const double w = opt.smoothing_width > 0.0 ? opt.smoothing_width : default_smoothing_width(params, opt.ensemble.dt);
  const int nb = b.base_dim;

  SDESpec base;
  base.metric = b.base_metric();
  base.params = params;
  if (b.potential) base.potential = *b.potential;
  const FDScheme jfd = opt.jacobian_fd;
  base.jacobian = [&b, jfd, params](const Vec& x) { return jacobian_from_jet(b, x, jfd, params).jacobian; };

  SDESpec total;
  total.metric = assemble_kk_metric(b);
  total.params = params;
  if (b.potential) {
    const ScalarField v = *b.potential;
    total.potential = [v, nb](const Vec& q) { return v(q.head(nb)); };
  }

  const Domain& base_dom = base.metric.domain;
  auto base_bump = [&](const Vec& x) {
    return chart_gaussian(base_dom, x, x_b, w) / std::sqrt(b.h(x).determinant());
  };

  EnsembleOptions lhs_opt = opt.ensemble;
  lhs_opt.seed = stream_seed(opt.ensemble.seed, 0x4C4853ULL);
  const SampleMean lhs = sample_mean(simulate_observable(base, x_a, lhs_opt, base_bump));
  const double dress = std::exp(-0.25 * (b.log_det_gamma(x_a) + b.log_det_gamma(x_b)));

  // Fibre part: Haar average over theta of a class-function mollifier centred at theta.
  const HaarQuadrature quad = haar_quadrature(b.group.chart, opt.haar_resolution);
  const GroupChart& gc = b.group.chart;
  const int order = opt.mollifier_order;
  auto total_bump = [&](const Vec& q) {
    const Vec x = q.head(nb);
    const Vec a = q.tail(q.size() - nb);
    const double fibre = quad.integrate([&](const Vec& theta) { return gc.relative_mollifier(theta, a, order); });
    return base_bump(x) * fibre * std::exp(-0.5 * b.log_det_gamma(x));
  };
  EnsembleOptions rhs_opt = opt.ensemble;
  rhs_opt.seed = stream_seed(opt.ensemble.seed, 0x524853ULL);
  const SampleMean rhs = sample_mean(simulate_observable(total, b.section(x_a), rhs_opt, total_bump));

  ReductionCheck rc;
  rc.case_name = b.label;
  rc.lhs = dress * lhs.mean;
  rc.lhs_error = dress * lhs.std_error;
  rc.rhs = rhs.mean;
  rc.rhs_error = rhs.std_error;
  if (rc.rhs == 0.0) throw NumericalFailure("group-averaged kernel estimate is zero");
  rc.ratio = rc.lhs / rc.rhs;
  rc.combined_error = std::abs(rc.ratio) * std::hypot(rc.lhs_error / rc.lhs, rc.rhs_error / rc.rhs);
  rc.n_paths = opt.ensemble.n_paths;
  rc.discarded_lhs = lhs.discarded;
  rc.discarded_rhs = rhs.discarded;
  rc.dt = opt.ensemble.dt;
  rc.seed = opt.ensemble.seed;
  rc.smoothing_width = w;
  return rc;
}

}  // namespace kklab
