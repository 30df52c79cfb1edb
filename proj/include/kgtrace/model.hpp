#pragma once

#include "kgtrace/graph.hpp"
#include "kgtrace/matrix.hpp"
#include "kgtrace/optim.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace kgt {

enum class Activation { Relu, Linear };

struct EncoderConfig {
  // Input width m, hidden widths..., output width d.
  std::vector<std::size_t> layer_dims{0, 32, 16};
  // One per layer; empty means relu on hidden layers and linear output.
  std::vector<Activation> activations;
  double learning_rate = 0.01;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  std::size_t disc_hidden = 64;
  double disc_learning_rate = 0.001;
  double gan_weight = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Graphs with more nodes than this train on sampled pairs and sampled
  // discriminator rows instead of the dense n x n correlation matrix.
  std::size_t dense_limit = 5000;
  std::size_t disc_batch_rows = 256;

  std::size_t layer_count() const { return layer_dims.size() - 1; }
  Activation activation(std::size_t layer) const;
  // Throws ShapeError on fewer than two layers, zero widths or d < 2.
  void validate() const;
};

// Two-layer perceptron n -> h -> 1 over adjacency rows.
struct DiscriminatorWeights {
  DenseMatrix w1;  // n x h
  DenseMatrix b1;  // 1 x h
  DenseMatrix w2;  // h x 1
  DenseMatrix b2;  // 1 x 1
};

struct ModelState {
  std::vector<DenseMatrix> gcn_weights;  // dims[l] x dims[l+1]
  std::vector<Activation> activations;
  DiscriminatorWeights disc;
  AdamState recon_opt;
  AdamState gen_opt;
  AdamState disc_opt;
  std::size_t epoch = 0;
};

// Glorot-initialised GCN weights, Glorot/zero discriminator for n-wide rows.
ModelState init_state(const EncoderConfig& cfg, std::size_t node_count);

struct EmbeddingMatrix {
  DenseMatrix z;  // n x d, one row per node
};

// sigmoid(Z Z^T), stored densely and exactly symmetric.
class CorrelationMatrix {
 public:
  CorrelationMatrix() = default;
  explicit CorrelationMatrix(DenseMatrix values);

  std::size_t dim() const { return values_.rows(); }
  double at(NodeId i, NodeId j) const { return values_(i, j); }
  std::span<const double> row(NodeId i) const { return values_.row(i); }
  const DenseMatrix& values() const { return values_; }

 private:
  DenseMatrix values_;
};

// H(l+1) = act(P H(l) W(l)), H(0) = X, with P the normalized propagation matrix.
EmbeddingMatrix encode(const DenseMatrix& x, const SparseAdjacency& propagation,
                       const ModelState& state);

CorrelationMatrix decode(const EmbeddingMatrix& z);

// Positive-class weight (n^2 - 2|E|) / (2|E|) for raw adjacency A; 1 without edges.
double positive_weight(const SparseAdjacency& a);

// Weighted binary cross-entropy of the correlation matrix against A + I.
double recon_loss(const CorrelationMatrix& a_hat, const SparseAdjacency& a);

// Realness score in (0, 1) per row.
DenseMatrix discriminate(const DenseMatrix& rows, const DiscriminatorWeights& disc);

struct GanLosses {
  double disc_loss;
  double gen_loss;  // non-saturating: -mean log D(fake)
};
GanLosses gan_losses(std::span<const double> real_scores, std::span<const double> fake_scores);

// Inputs shared by every training objective for one graph.
struct TrainingInputs {
  TrainingInputs(const Graph& graph, DenseMatrix features);

  DenseMatrix x;
  SparseAdjacency adjacency;    // raw A
  SparseAdjacency targets;      // A + I
  SparseAdjacency propagation;  // D~^-1/2 (A + I) D~^-1/2
  double pos_weight;
  std::size_t edge_count;

  std::size_t node_count() const { return adjacency.dim(); }
};

// Loss value plus gradients for every trainable matrix. Gradients of the
// part of the model a loss does not train are left empty.
struct LossEvaluation {
  double value = 0.0;
  std::vector<DenseMatrix> gcn_grads;
  std::optional<DiscriminatorWeights> disc_grads;
};

// Which node pairs / adjacency rows an objective covers. Empty means all
// n^2 pairs and all n rows.
struct Sample {
  std::vector<std::pair<NodeId, NodeId>> negative_pairs;
  std::vector<NodeId> rows;
  bool dense() const { return negative_pairs.empty() && rows.empty(); }
};

LossEvaluation evaluate_recon_loss(const ModelState& state, const TrainingInputs& in,
                                   const Sample& sample = {});
LossEvaluation evaluate_disc_loss(const ModelState& state, const TrainingInputs& in,
                                  const Sample& sample = {});
LossEvaluation evaluate_gen_loss(const ModelState& state, const TrainingInputs& in,
                                 const Sample& sample = {});

struct EpochRecord {
  std::size_t epoch;
  double recon_loss;
  double disc_loss;  // 0 when the adversarial terms are disabled
  double gen_loss;
};

struct TrainResult {
  ModelState state;
  EmbeddingMatrix embedding;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&, const ModelState&)>;

// Per epoch: a generator step on the reconstruction loss, a discriminator
// step on real rows (A + I) versus generated rows (sigmoid(Z Z^T), held
// fixed), and a generator step on gan_weight * generator loss.
// Throws NumericError if any loss becomes non-finite.
TrainResult train(const Graph& graph, DenseMatrix features, const EncoderConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace kgt
