#pragma once

#include "kgtrace/matrix.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace kgt {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates, one pair per parameter matrix.
struct AdamState {
  std::vector<DenseMatrix> m;
  std::vector<DenseMatrix> v;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update. An empty state is sized on first use.
void adam_step(std::span<DenseMatrix> params, std::span<const DenseMatrix> grads,
               AdamState& state, const AdamConfig& cfg);

}  // namespace kgt
