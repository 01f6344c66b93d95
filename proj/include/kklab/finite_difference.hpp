#pragma once

#include <cmath>

#include "kklab/chart_calculus.hpp"

// Central-difference stencils shared by the geometry modules. The value type
// only needs +, - and scalar multiplication, so scalars, vectors and matrices
// all go through the same code.
namespace kklab::fd {

namespace detail {

template <class F>
auto first_once(F&& f, const Vec& p, int k, double h, int order) {
  Vec q = p;
  auto at = [&](double offset) {
    q[k] = p[k] + offset;
    return f(q);
  };
  if (order == 2) {
    auto fp = at(h);
    auto fm = at(-h);
    return decltype(fp)((fp - fm) * (0.5 / h));
  }
  auto f2p = at(2 * h);
  auto f1p = at(h);
  auto f1m = at(-h);
  auto f2m = at(-2 * h);
  return decltype(f1p)((f2m - f2p + 8.0 * (f1p - f1m)) * (1.0 / (12.0 * h)));
}

template <class F>
auto second_once(F&& f, const Vec& p, int k, int l, double hk, double hl, int order) {
  if (k != l) {
    auto inner = [&](const Vec& q) { return first_once(f, q, l, hl, order); };
    return first_once(inner, p, k, hk, order);
  }
  Vec q = p;
  auto at = [&](double offset) {
    q[k] = p[k] + offset;
    return f(q);
  };
  const double h = hk;
  auto f0 = at(0.0);
  if (order == 2) {
    auto fp = at(h);
    auto fm = at(-h);
    return decltype(f0)((fp + fm - 2.0 * f0) * (1.0 / (h * h)));
  }
  auto f2p = at(2 * h);
  auto f1p = at(h);
  auto f1m = at(-h);
  auto f2m = at(-2 * h);
  return decltype(f0)((16.0 * (f1p + f1m) - (f2p + f2m) - 30.0 * f0) * (1.0 / (12.0 * h * h)));
}

inline double richardson_factor(int order) { return std::pow(2.0, order); }

}  // namespace detail

/// d_k f at p.
template <class F>
auto first(F&& f, const Vec& p, int k, const FDScheme& s) {
  auto coarse = detail::first_once(f, p, k, s.h(k), s.order);
  if (!s.richardson) return coarse;
  auto fine = detail::first_once(f, p, k, 0.5 * s.h(k), s.order);
  const double r = detail::richardson_factor(s.order);
  return decltype(coarse)((r * fine - coarse) * (1.0 / (r - 1.0)));
}

/// d_k d_l f at p.
template <class F>
auto second(F&& f, const Vec& p, int k, int l, const FDScheme& s) {
  auto coarse = detail::second_once(f, p, k, l, s.h(k), s.h(l), s.order);
  if (!s.richardson) return coarse;
  auto fine = detail::second_once(f, p, k, l, 0.5 * s.h(k), 0.5 * s.h(l), s.order);
  const double r = detail::richardson_factor(s.order);
  return decltype(coarse)((r * fine - coarse) * (1.0 / (r - 1.0)));
}

}  // namespace kklab::fd
