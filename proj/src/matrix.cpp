#include "kgtrace/matrix.hpp"
#include "kgtrace/error.hpp"
#include "kgtrace/random.hpp"
#include "kgtrace/tensor.hpp"

#include <cmath>
#include <string>

namespace kgt {

namespace {

std::string shape(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : m_(EigenMatrix::Constant(static_cast<Eigen::Index>(rows),
                               static_cast<Eigen::Index>(cols), fill)) {}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  m_.resize(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw ShapeError("DenseMatrix: ragged initializer");
    }
    std::size_t j = 0;
    for (double v : row) {
      m_(i, j++) = v;
    }
    ++i;
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  return DenseMatrix(EigenMatrix::Identity(static_cast<Eigen::Index>(n),
                                           static_cast<Eigen::Index>(n)));
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape(a) + " * " + shape(b));
  }
  EigenMatrix out(a.eigen().rows(), b.eigen().cols());
  out.noalias() = a.eigen() * b.eigen();
  return DenseMatrix(std::move(out));
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + shape(a) + " * (" + shape(b) + ")^T");
  }
  EigenMatrix out(a.eigen().rows(), b.eigen().rows());
  out.noalias() = a.eigen() * b.eigen().transpose();
  return DenseMatrix(std::move(out));
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: (" + shape(a) + ")^T * " + shape(b));
  }
  EigenMatrix out(a.eigen().cols(), b.eigen().cols());
  out.noalias() = a.eigen().transpose() * b.eigen();
  return DenseMatrix(std::move(out));
}

DenseMatrix transpose(const DenseMatrix& a) {
  return DenseMatrix(EigenMatrix(a.eigen().transpose()));
}

DenseMatrix relu(const DenseMatrix& m) {
  return DenseMatrix(EigenMatrix(m.eigen().cwiseMax(0.0)));
}

DenseMatrix sigmoid(const DenseMatrix& m) {
  DenseMatrix out(m.rows(), m.cols());
  auto src = m.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = sigmoid(src[i]);
  }
  return out;
}

DenseMatrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("glorot_init: dimensions must be positive");
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Rng rng(seed);
  DenseMatrix out(rows, cols);
  for (double& v : out.values()) {
    v = uniform(rng, -bound, bound);
  }
  return out;
}

DenseMatrix spmm(const SparseAdjacency& s, const DenseMatrix& m) {
  if (s.dim() != m.rows()) {
    throw ShapeError("spmm: sparse " + std::to_string(s.dim()) + "x" +
                     std::to_string(s.dim()) + " * " + shape(m));
  }
  DenseMatrix out(s.dim(), m.cols());
  for (const auto& e : s.entries()) {
    auto src = m.row(e.col);
    auto dst = out.row(e.row);
    for (std::size_t c = 0; c < src.size(); ++c) {
      dst[c] += e.value * src[c];
    }
  }
  return out;
}

DenseMatrix spmm_transposed(const SparseAdjacency& s, const DenseMatrix& m) {
  if (s.dim() != m.rows()) {
    throw ShapeError("spmm_transposed: dimension mismatch");
  }
  DenseMatrix out(s.dim(), m.cols());
  for (const auto& e : s.entries()) {
    auto src = m.row(e.row);
    auto dst = out.row(e.col);
    for (std::size_t c = 0; c < src.size(); ++c) {
      dst[c] += e.value * src[c];
    }
  }
  return out;
}

}  // namespace kgt
