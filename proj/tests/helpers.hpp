#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/LU>

#include "kklab/chart_calculus.hpp"

namespace testutil {

using kklab::Domain;
using kklab::Mat;
using kklab::Vec;

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline kklab::ChartedMetric constant_metric(const Mat& g, const Domain& d) {
  kklab::ChartedMetric m;
  m.dim = static_cast<int>(g.rows());
  m.metric_at = [g](const Vec&) { return g; };
  m.domain = d;
  m.label = "constant";
  return m;
}

inline Mat random_spd(int n, std::mt19937_64& rng, double floor = 0.3) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat l(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) l(i, j) = u(rng);
  return l.transpose() * l + floor * Mat::Identity(n, n);
}

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testutil
