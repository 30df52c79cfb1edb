#pragma once

#include "kgtrace/matrix.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace kgt::test_support {

// Entrywise EXPECT_NEAR with the tolerance scaled by max(1, |expected|).
inline void expect_close(const DenseMatrix& a, const DenseMatrix& b, double tol) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(1.0, std::abs(b.values()[i]));
    EXPECT_NEAR(a.values()[i], b.values()[i], tol * scale) << "entry " << i;
  }
}

}  // namespace kgt::test_support
