#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "helpers.hpp"
#include "kklab/catalog.hpp"
#include "kklab/stochastic_lab.hpp"

using namespace kklab;
using testutil::vec;
using std::numbers::pi;

namespace {

SDESpec flat(int dim, bool periodic, double half_width = 50.0) {
  SDESpec s;
  const Domain d = periodic ? Domain::periodic_box(dim, 0.0, 2 * pi)
                            : Domain::box(Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width));
  s.metric = testutil::constant_metric(Mat::Identity(dim, dim), d);
  return s;
}

// Heat kernel of (1/2) s d^2/dx^2 on the circle after smoothing by a Gaussian of width w.
double wrapped_gaussian(double dx, double variance) {
  double sum = 0.0;
  for (int k = -20; k <= 20; ++k) {
    const double z = dx + 2 * pi * k;
    sum += std::exp(-0.5 * z * z / variance);
  }
  return sum / std::sqrt(2 * pi * variance);
}

ChartedMetric exp_line(double c) {
  ChartedMetric m;
  m.dim = 1;
  m.metric_at = [c](const Vec& x) { return Mat::Constant(1, 1, std::exp(c * x[0])); };
  m.domain = Domain::box(vec({-20.0}), vec({20.0}));
  return m;
}

}  // namespace

TEST_CASE("metric square-root frames") {
  const auto id = testutil::constant_metric(Mat::Identity(3, 3), Domain::periodic_box(3, 0, 1));
  CHECK(testutil::max_abs(metric_sqrt_frame(id, Vec::Zero(3)) - Mat::Identity(3, 3)) < 1e-15);
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  Mat expected = Mat::Zero(2, 2);
  expected(0, 0) = 0.5;
  expected(1, 1) = 1.0 / 3;
  CHECK(testutil::max_abs(metric_sqrt_frame(testutil::constant_metric(d, Domain::periodic_box(2, 0, 1)), Vec::Zero(2)) -
                          expected) < 1e-15);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    const Mat g = testutil::random_spd(3, rng);
    SDESpec s;
    s.metric = testutil::constant_metric(g, Domain::periodic_box(3, 0, 1));
    const Mat x = metric_sqrt_frame(s.metric, Vec::Zero(3));
    const Mat gi = g.inverse();
    CHECK(testutil::max_abs(x * x.transpose() - gi) < 1e-12);
    CHECK(testutil::max_abs(x - x.transpose()) < 1e-12);
    for (FrameKind k : {FrameKind::Cholesky, FrameKind::Symmetric}) {
      s.frame = k;
      const Mat f = diffusion_frame(s, Vec::Zero(3));
      CHECK(testutil::max_abs(f * f.transpose() - gi) < 1e-12);
    }
  }
  Mat bad = Mat::Identity(2, 2);
  bad(1, 1) = -1;
  CHECK_THROWS_AS(metric_sqrt_frame(testutil::constant_metric(bad, Domain::periodic_box(2, 0, 1)), Vec::Zero(2)),
                  SingularMetric);
}

TEST_CASE("drift matches the analytic formula for G = exp(2x)") {
  SDESpec s;
  s.metric = exp_line(2.0);
  s.params.kappa = 1.7;
  for (double x : {-1.0, 0.0, 0.3, 1.4}) {
    // 1/2 mu^2 kappa G^{-1/2} d(G^{1/2} G^{-1}) = -1/2 mu^2 kappa exp(-2x)
    CHECK(sde_drift(s, vec({x}))[0] == doctest::Approx(-0.5 * 1.7 * std::exp(-2 * x)).epsilon(1e-8));
  }
}

TEST_CASE("frame property along a path") {
  const Geometry g = resolve_geometry("warped-su2");
  SDESpec s;
  s.metric = g.total_metric();
  const PathResult path = euler_maruyama_path(s, vec({1.0, 2.0, 0.1, 0.2, 0.3}), 0.0, 0.05, 1e-3, 77, true);
  CHECK(path.trace.size() == 51);
  for (const Vec& p : path.trace) {
    const Mat f = diffusion_frame(s, p);
    CHECK(testutil::max_abs(f * f.transpose() - s.metric.at(p).inverse()) < 1e-10);
  }
}

TEST_CASE("flat metric: increments are scaled Brownian motion") {
  SDESpec s = flat(1, false);
  s.params.hbar = 0.5;
  s.params.kappa = 2.0;  // mu^2 kappa = 1
  s.params.m = 0.5;
  EnsembleOptions opt;
  opt.t_a = 0.2;
  opt.t_b = 1.2;
  opt.dt = 0.01;
  opt.n_paths = 4000;
  opt.seed = 5;
  const auto values = simulate_observable(s, vec({0.0}), opt, [](const Vec& e) { return e[0] * e[0]; });
  const SampleMean var = sample_mean(values);
  const double expected = s.params.diffusion() * (opt.t_b - opt.t_a);
  CHECK(std::abs(var.mean - expected) < 3 * var.std_error);
  CHECK(var.discarded == 0);
}

TEST_CASE("constant potential gives the exact weight") {
  SDESpec s = flat(2, true);
  s.params.kappa = 0.5;
  s.params.m = 2.0;
  s.potential = [](const Vec&) { return 0.3; };
  const PathResult r = euler_maruyama_path(s, vec({1.0, 1.0}), 0.0, 0.8, 0.01, 3);
  CHECK(r.steps == 80);
  // mu^2 kappa m = hbar kappa
  CHECK(r.log_weight == doctest::Approx(0.3 * 0.8 / (1.0 * 0.5)).epsilon(1e-14));
}

TEST_CASE("paths are reproducible and independent of worker count") {
  const Geometry g = resolve_geometry("trivial-su2-product");
  SDESpec s;
  s.metric = g.total_metric();
  const Vec start = vec({1.0, 1.0, 0.0, 0.0, 0.0});
  const PathResult a = euler_maruyama_path(s, start, 0.0, 0.1, 1e-3, 99);
  const PathResult b = euler_maruyama_path(s, start, 0.0, 0.1, 1e-3, 99);
  CHECK((a.end - b.end).norm() == 0.0);
  EnsembleOptions opt;
  opt.t_b = 0.05;
  opt.dt = 1e-3;
  opt.n_paths = 200;
  auto obs = [](const Vec& e) { return std::cos(e[0]) + e[3]; };
  const auto one = simulate_observable(s, start, opt, obs);
  opt.workers = 3;
  const auto three = simulate_observable(s, start, opt, obs);
  CHECK(one == three);
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(stream_seed(7, i));
  CHECK(seeds.size() == 1000);
}

TEST_CASE("circle kernel matches the wrapped heat kernel") {
  const SDESpec s = flat(1, true);
  EnsembleOptions opt;
  opt.t_b = 0.5;
  opt.dt = 1e-2;
  opt.n_paths = 20000;
  opt.seed = 11;
  const double w = 0.15;
  for (double xb : {0.3, 1.0, 3.0}) {
    const KernelEstimate k = feynman_kac_kernel(s, vec({0.0}), vec({xb}), opt, w);
    CHECK(k.std_error > 0);
    CHECK(k.n_paths == 20000);
    const double oracle = wrapped_gaussian(xb, s.params.diffusion() * 0.5 + w * w);
    CHECK(std::abs(k.value - oracle) < 3 * k.std_error);
  }
}

TEST_CASE("short-time kernel integrates to one") {
  const SDESpec s = flat(1, true);
  EnsembleOptions opt;
  opt.t_b = 0.01;
  opt.dt = 1e-3;
  opt.n_paths = 200;
  const int n = 64;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += feynman_kac_kernel(s, vec({1.0}), vec({2 * pi * i / n}), opt, 0.3).value * 2 * pi / n;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("flat 2-torus kernel factorizes") {
  const SDESpec s2 = flat(2, true);
  EnsembleOptions opt;
  opt.t_b = 0.4;
  opt.dt = 1e-2;
  opt.n_paths = 20000;
  const double w = 0.2;
  const KernelEstimate k = feynman_kac_kernel(s2, vec({0.0, 0.0}), vec({0.5, -0.3}), opt, w);
  const double var = 0.4 + w * w;
  const double oracle = wrapped_gaussian(0.5, var) * wrapped_gaussian(-0.3, var);
  CHECK(std::abs(k.value - oracle) < 3 * k.std_error);
}

TEST_CASE("kernel symmetry on a reversible metric") {
  SDESpec s;
  s.metric.dim = 1;
  s.metric.metric_at = [](const Vec& x) { return Mat::Constant(1, 1, std::exp(0.6 * std::sin(x[0]))); };
  s.metric.domain = Domain::periodic_box(1, 0.0, 2 * pi);
  EnsembleOptions opt;
  opt.t_b = 0.5;
  opt.dt = 1e-2;
  opt.n_paths = 20000;
  opt.seed = 3;
  const KernelEstimate ab = feynman_kac_kernel(s, vec({0.5}), vec({1.5}), opt, 0.15);
  opt.seed = 4;
  const KernelEstimate ba = feynman_kac_kernel(s, vec({1.5}), vec({0.5}), opt, 0.15);
  CHECK(std::abs(ab.value - ba.value) < 3 * std::hypot(ab.std_error, ba.std_error));
}

TEST_CASE("standard error shrinks like n^-1/2") {
  const SDESpec s = flat(1, true);
  EnsembleOptions opt;
  opt.t_b = 0.2;
  opt.dt = 1e-2;
  opt.n_paths = 1000;
  const double e1 = feynman_kac_kernel(s, vec({0.0}), vec({0.4}), opt, 0.2).std_error;
  opt.n_paths = 10000;
  const double e2 = feynman_kac_kernel(s, vec({0.0}), vec({0.4}), opt, 0.2).std_error;
  const double slope = std::log10(e1 / e2);
  CHECK(slope > 0.4);
  CHECK(slope < 0.6);
}

TEST_CASE("halving dt stays within statistical error") {
  SDESpec s;
  s.metric = exp_line(0.4);
  s.metric.domain = Domain::periodic_box(1, -pi, pi);  // smooth enough near the start; paths stay local
  s.metric.metric_at = [](const Vec& x) { return Mat::Constant(1, 1, std::exp(0.4 * std::cos(x[0]))); };
  EnsembleOptions opt;
  opt.t_b = 0.3;
  opt.dt = 2e-2;
  opt.n_paths = 20000;
  const KernelEstimate coarse = feynman_kac_kernel(s, vec({0.0}), vec({0.4}), opt, 0.2);
  opt.dt = 1e-2;
  opt.seed = 2;
  const KernelEstimate fine = feynman_kac_kernel(s, vec({0.0}), vec({0.4}), opt, 0.2);
  CHECK(std::abs(coarse.value - fine.value) < 3 * std::hypot(coarse.std_error, fine.std_error));
}

TEST_CASE("paths leaving the chart are discarded and counted") {
  const SDESpec s = flat(1, false, 0.5);
  EnsembleOptions opt;
  opt.t_b = 1.0;
  opt.dt = 1e-2;
  opt.n_paths = 500;
  const KernelEstimate k = feynman_kac_kernel(s, vec({0.0}), vec({0.0}), opt, 0.2);
  CHECK(k.n_discarded > 0);
  CHECK(k.n_discarded < 500);
  CHECK_THROWS_AS(euler_maruyama_path(s, vec({0.0}), 0.0, 50.0, 0.5, 1), ChartExit);
  const SDESpec tiny = flat(1, false, 0.05);
  opt.t_b = 2.0;
  CHECK_THROWS_AS(feynman_kac_kernel(tiny, vec({0.0}), vec({0.0}), opt, 0.2), InsufficientPaths);
}

TEST_CASE("configuration errors") {
  const SDESpec s = flat(1, true);
  EnsembleOptions opt;
  opt.n_paths = 50;
  CHECK_THROWS_AS(feynman_kac_kernel(s, vec({0.0}), vec({0.0}), opt, 0.2), ConfigError);
  opt.n_paths = 200;
  CHECK_THROWS_AS(feynman_kac_kernel(s, vec({0.0}), vec({0.0}), opt, 0.0), ConfigError);
  CHECK_THROWS_AS(euler_maruyama_path(s, vec({0.0}), 0.0, 1.0, 0.3, 1), ConfigError);
}

TEST_CASE("compensated mean skips discarded entries") {
  const std::vector<double> v = {1.0, std::nan(""), 3.0, 2.0};
  const SampleMean m = sample_mean(v);
  CHECK(m.mean == 2.0);
  CHECK(m.used == 3);
  CHECK(m.discarded == 1);
  CHECK(m.std_error == doctest::Approx(std::sqrt(1.0 / 3.0)));
}

TEST_CASE("reduction check on a small product case") {
  const KKBundle b = resolve_geometry("trivial-u1-product").bundle.value();
  ReductionOptions opt;
  opt.ensemble.t_b = 0.2;
  opt.ensemble.dt = 1e-2;
  opt.ensemble.n_paths = 4000;
  const ReductionCheck r = reduction_check(b, vec({1.0}), vec({1.3}), opt);
  CHECK(r.stderr_distance() < 3.0);
  CHECK(r.lhs != r.rhs);  // independent streams
  CHECK(r.discarded_lhs == 0);
  CHECK(r.smoothing_width == doctest::Approx(3 * std::sqrt(1e-2)));
}
