#pragma once

#include "kgtrace/graph.hpp"
#include "kgtrace/matrix.hpp"
#include "kgtrace/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace kgt {

struct ClusterAssignment {
  std::vector<int> labels;  // cluster id per row, in [0, k)
  DenseMatrix centroids;    // k x d
  double inertia = 0.0;
  std::size_t iterations = 0;
  // Inertia after each assignment step; non-increasing.
  std::vector<double> inertia_trace;
};

// Lloyd's algorithm with k-means++ seeding. Stops at an assignment fixed
// point or after max_iters. An empty cluster is reseeded at the point
// farthest from its current centroid.
ClusterAssignment kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed,
                         std::size_t max_iters = 300);

// Lowest-inertia result over `restarts` seeds derived from `seed`.
ClusterAssignment kmeans_best_of(const DenseMatrix& points, std::size_t k,
                                 std::uint64_t seed, std::size_t restarts,
                                 std::size_t max_iters = 300);

// Maximum-weight perfect matching on a square matrix; result[row] = column.
std::vector<std::size_t> hungarian_max(const std::vector<std::vector<double>>& weight);

// Fraction of nodes correctly labelled under the best one-to-one mapping of
// predicted clusters to classes.
double cluster_accuracy(std::span<const int> predicted, std::span<const int> truth);

struct EdgeSplit {
  std::vector<Edge> train_edges;
  std::vector<Edge> test_pos;
  std::vector<Edge> test_neg;
  double ratio = 0.0;
};

// round(ratio * |E|) held-out positives and as many sampled non-edges.
// Both test lists are prefixes of seed-determined sequences, so splits with
// the same seed are nested across ratios.
EdgeSplit split_edges(const Graph& graph, double test_ratio, std::uint64_t seed);

struct LinkMetrics {
  double ap = 0.0;
  double auc = 0.0;
};

// Mann-Whitney AUC with midranks (ties count one half).
double auc_score(std::span<const double> positive, std::span<const double> negative);
// Step-wise average precision over distinct score thresholds.
double average_precision(std::span<const double> positive, std::span<const double> negative);

LinkMetrics ap_auc(std::span<const double> positive, std::span<const double> negative);
LinkMetrics ap_auc(const CorrelationMatrix& a_hat, const EdgeSplit& split);
// Scores sigmoid(z_i . z_j) directly, for graphs too large for a dense matrix.
LinkMetrics ap_auc(const EmbeddingMatrix& z, const EdgeSplit& split);

// TSV: header, then `node_id<TAB>label<TAB>z_1 ... z_d` with 17 significant digits.
void export_embeddings(const EmbeddingMatrix& z, std::span<const int> labels,
                       const std::filesystem::path& path);

struct EmbeddingRow {
  NodeId id;
  int label;
  std::vector<double> values;
};
std::vector<EmbeddingRow> read_embeddings(const std::filesystem::path& path);

}  // namespace kgt
