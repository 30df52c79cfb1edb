#pragma once

// Hand-seeded inputs shared by the unit and acceptance tests.

#include "kgtrace/model.hpp"
#include "kgtrace/tracer.hpp"

#include <initializer_list>
#include <tuple>
#include <vector>

namespace kgt::fixture {

// Symmetric correlation matrix with 0.5 on the diagonal and `base`
// elsewhere, then the listed entries overwritten.
inline CorrelationMatrix seeded(std::size_t n, double base,
                                std::initializer_list<std::tuple<NodeId, NodeId, double>> entries) {
  DenseMatrix m(n, n, base);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 0.5;
  for (auto [i, j, w] : entries) {
    m(i, j) = w;
    m(j, i) = w;
  }
  return CorrelationMatrix(m);
}

// Names used by the registration anomaly example.
enum : NodeId {
  kRate = 0,
  kSuccessCnt,
  kFailCnt,
  kAuthType,
  kMsgflag,
  kRequestCnt,
  kNssai,
  kProcStatus,
  kNodeCount
};

inline CorrelationMatrix registration_example() {
  return seeded(kNodeCount, 0.40,
                {{kRate, kSuccessCnt, 0.575},
                 {kRate, kFailCnt, 0.570},
                 {kRate, kAuthType, 0.563},
                 {kRate, kRequestCnt, 0.550},
                 {kSuccessCnt, kMsgflag, 0.612},
                 {kSuccessCnt, kProcStatus, 0.590},
                 {kSuccessCnt, kNssai, 0.540},
                 {kFailCnt, kAuthType, 0.601},
                 {kFailCnt, kNssai, 0.585},
                 {kAuthType, kMsgflag, 0.560}});
}

inline std::vector<NodeLabel> registration_names() {
  return {{"regis success rate", "algorithm_indicator"},
          {"registration success cnt", "statistical_indicator"},
          {"registration fail cnt", "statistical_indicator"},
          {"auth type", "data_field_type"},
          {"msgflag", "data_field_type"},
          {"regis request cnt", "statistical_indicator"},
          {"rejected NSSAI number", "data_field_type"},
          {"procedure status", "data_field_type"}};
}

}  // namespace kgt::fixture
