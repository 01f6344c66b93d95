#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace kklab {

// Largest chart dimension handled. Fixed upper bound keeps small matrices
// on the stack, which matters in the Monte Carlo inner loop.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using CMat = Eigen::MatrixXcd;

using ScalarField = std::function<double(const Vec&)>;
using MatrixField = std::function<Mat(const Vec&)>;

// Errors ------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMetric : public Error {
 public:
  using Error::Error;
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
};

class ChartExit : public Error {
 public:
  using Error::Error;
};

class InsufficientPaths : public Error {
 public:
  using Error::Error;
};

class RepresentationMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// Dense rank-3 array, row-major in (i, j, k).
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int n0, int n1, int n2) : n_{n0, n1, n2}, data_(static_cast<std::size_t>(n0) * n1 * n2, 0.0) {}

  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }

  int extent(int axis) const { return n_[axis]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_[1] + j) * n_[2] + k;
  }
  int n_[3] = {0, 0, 0};
  std::vector<double> data_;
};

// Dense rank-4 array, row-major in (a, b, c, d).
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  double& operator()(int a, int b, int c, int d) { return data_[index(a, b, c, d)]; }
  double operator()(int a, int b, int c, int d) const { return data_[index(a, b, c, d)]; }

  int extent() const { return n_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t index(int a, int b, int c, int d) const {
    return ((static_cast<std::size_t>(a) * n_ + b) * n_ + c) * n_ + d;
  }
  int n_ = 0;
  std::vector<double> data_;
};

}  // namespace kklab
