#pragma once

#include "kgtrace/graph.hpp"
#include "kgtrace/matrix.hpp"

namespace kgt {

// S * M for a sparse square S.
DenseMatrix spmm(const SparseAdjacency& s, const DenseMatrix& m);
// S^T * M.
DenseMatrix spmm_transposed(const SparseAdjacency& s, const DenseMatrix& m);

}  // namespace kgt
