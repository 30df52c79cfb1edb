#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>

namespace kgt {

using EigenMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);
  explicit DenseMatrix(EigenMatrix m) : m_(std::move(m)) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return static_cast<std::size_t>(m_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(m_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(m_.size()); }
  bool empty() const { return m_.size() == 0; }

  double& operator()(std::size_t r, std::size_t c) { return m_(r, c); }
  double operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

  std::span<double> values() { return {m_.data(), size()}; }
  std::span<const double> values() const { return {m_.data(), size()}; }
  std::span<double> row(std::size_t r) { return {m_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const {
    return {m_.data() + r * cols(), cols()};
  }

  EigenMatrix& eigen() { return m_; }
  const EigenMatrix& eigen() const { return m_; }

  bool all_finite() const { return m_.allFinite(); }
  double sum() const { return m_.sum(); }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a.m_ == b.m_;
  }

 private:
  EigenMatrix m_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// a * b^T
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
// a^T * b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

DenseMatrix relu(const DenseMatrix& m);
DenseMatrix sigmoid(const DenseMatrix& m);

// Overflow-safe logistic function. The result is clamped to the open
// interval (0, 1): beyond |x| ~ 37 the exact value is not representable and
// would otherwise round to 1.0 (or underflow to 0.0 below x ~ -745).
inline double sigmoid(double x) {
  constexpr double lo = 0x1.0p-1022;
  constexpr double hi = 1.0 - 0x1.0p-53;
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return s < lo ? lo : (s > hi ? hi : s);
}

// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Uniform in +-sqrt(6 / (rows + cols)).
DenseMatrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace kgt
