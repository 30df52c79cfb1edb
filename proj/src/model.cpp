#include "kgtrace/model.hpp"
#include "kgtrace/error.hpp"
#include "kgtrace/random.hpp"
#include "kgtrace/tape.hpp"
#include "kgtrace/tensor.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace kgt {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct DiscVars {
  Var w1, b1, w2, b2;
};

DiscVars disc_vars(Tape& t, const DiscriminatorWeights& d, bool trainable) {
  auto put = [&](const DenseMatrix& m) { return trainable ? t.parameter(m) : t.constant(m); };
  return {put(d.w1), put(d.b1), put(d.w2), put(d.b2)};
}

std::vector<Var> gcn_vars(Tape& t, const ModelState& s, bool trainable) {
  std::vector<Var> out;
  for (const auto& w : s.gcn_weights) {
    out.push_back(trainable ? t.parameter(w) : t.constant(w));
  }
  return out;
}

Var encoder_forward(Tape& t, const TrainingInputs& in, const std::vector<Var>& weights,
                    const std::vector<Activation>& acts) {
  Var h = t.constant(in.x);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = t.spmm(in.propagation, t.matmul(h, weights[l]));
    if (acts[l] == Activation::Relu) {
      h = t.relu(h);
    }
  }
  return h;
}

// Discriminator logits from the first-layer pre-activation rows * W1.
Var disc_logits(Tape& t, Var pre, const DiscVars& d) {
  Var h = t.relu(t.add_row(pre, d.b1));
  return t.add_row(t.matmul(h, d.w2), d.b2);
}

Var real_logits(Tape& t, const TrainingInputs& in, const Sample& sample, const DiscVars& d) {
  Var pre = t.spmm(in.targets, d.w1);
  if (!sample.rows.empty()) {
    pre = t.gather_rows(pre, sample.rows);
  }
  return disc_logits(t, pre, d);
}

Var fake_logits(Tape& t, Var z, const Sample& sample, const DiscVars& d) {
  Var left = sample.rows.empty() ? z : t.gather_rows(z, sample.rows);
  Var rows = t.sigmoid(t.matmul_nt(left, z));
  return disc_logits(t, t.matmul(rows, d.w1), d);
}

std::vector<DenseMatrix> collect(const Tape& t, const std::vector<Var>& vars) {
  std::vector<DenseMatrix> out;
  for (auto v : vars) {
    out.push_back(t.grad(v));
  }
  return out;
}

void check_finite(double v, std::size_t epoch, const char* what, const EpochRecord& rec) {
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-finite " << what << " at epoch " << epoch << " (recon=" << rec.recon_loss
        << ", disc=" << rec.disc_loss << ", gen=" << rec.gen_loss << ")";
    throw NumericError(msg.str());
  }
}

Sample draw_sample(const TrainingInputs& in, const EncoderConfig& cfg, Rng& rng) {
  Sample s;
  const std::size_t n = in.node_count();
  const std::size_t want = std::max<std::size_t>(1, 2 * in.edge_count);
  const std::size_t free_pairs = n * n - in.targets.nnz();
  if (free_pairs == 0) {
    throw DataError("sampled reconstruction needs at least one non-edge");
  }
  while (s.negative_pairs.size() < want) {
    const NodeId i = uniform_index(rng, n);
    const NodeId j = uniform_index(rng, n);
    if (in.targets.at(i, j) == 0.0) {
      s.negative_pairs.emplace_back(i, j);
    }
  }
  for (std::size_t k = 0; k < std::min(cfg.disc_batch_rows, n); ++k) {
    s.rows.push_back(uniform_index(rng, n));
  }
  return s;
}

void disc_adam(DiscriminatorWeights& d, DiscriminatorWeights grads, AdamState& state,
               const AdamConfig& cfg) {
  std::vector<DenseMatrix> params{std::move(d.w1), std::move(d.b1), std::move(d.w2),
                                  std::move(d.b2)};
  std::vector<DenseMatrix> g{std::move(grads.w1), std::move(grads.b1), std::move(grads.w2),
                             std::move(grads.b2)};
  adam_step(params, g, state, cfg);
  d = {std::move(params[0]), std::move(params[1]), std::move(params[2]),
       std::move(params[3])};
}

}  // namespace

Activation EncoderConfig::activation(std::size_t layer) const {
  if (!activations.empty()) {
    return activations.at(layer);
  }
  return layer + 1 == layer_count() ? Activation::Linear : Activation::Relu;
}

void EncoderConfig::validate() const {
  if (layer_dims.size() < 3) {
    throw ShapeError("encoder needs at least 2 GCN layers");
  }
  for (std::size_t d : layer_dims) {
    if (d == 0) {
      throw ShapeError("encoder layer widths must be positive");
    }
  }
  if (layer_dims.back() < 2) {
    throw ShapeError("embedding dimension must be at least 2");
  }
  if (!activations.empty() && activations.size() != layer_count()) {
    throw ShapeError("one activation per encoder layer is required");
  }
  if (disc_hidden == 0) {
    throw ShapeError("discriminator hidden width must be positive");
  }
  if (!(learning_rate > 0.0) || !(disc_learning_rate > 0.0) || !(gan_weight >= 0.0)) {
    throw ShapeError("learning rates must be positive and gan_weight non-negative");
  }
}

ModelState init_state(const EncoderConfig& cfg, std::size_t node_count) {
  cfg.validate();
  ModelState s;
  for (std::size_t l = 0; l < cfg.layer_count(); ++l) {
    s.gcn_weights.push_back(
        glorot_init(cfg.layer_dims[l], cfg.layer_dims[l + 1], mix_seed(cfg.seed, l)));
    s.activations.push_back(cfg.activation(l));
  }
  s.disc.w1 = glorot_init(node_count, cfg.disc_hidden, mix_seed(cfg.seed, 100));
  s.disc.b1 = DenseMatrix(1, cfg.disc_hidden);
  s.disc.w2 = glorot_init(cfg.disc_hidden, 1, mix_seed(cfg.seed, 101));
  s.disc.b2 = DenseMatrix(1, 1);
  return s;
}

CorrelationMatrix::CorrelationMatrix(DenseMatrix values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols()) {
    throw ShapeError("CorrelationMatrix must be square");
  }
}

EmbeddingMatrix encode(const DenseMatrix& x, const SparseAdjacency& propagation,
                       const ModelState& state) {
  if (x.rows() != propagation.dim()) {
    throw ShapeError("encode: feature rows " + std::to_string(x.rows()) +
                     " != node count " + std::to_string(propagation.dim()));
  }
  DenseMatrix h = x;
  for (std::size_t l = 0; l < state.gcn_weights.size(); ++l) {
    if (h.cols() != state.gcn_weights[l].rows()) {
      throw ShapeError("encode: layer " + std::to_string(l) + " expects width " +
                       std::to_string(state.gcn_weights[l].rows()) + ", got " +
                       std::to_string(h.cols()));
    }
    h = spmm(propagation, matmul(h, state.gcn_weights[l]));
    if (state.activations.at(l) == Activation::Relu) {
      h = relu(h);
    }
  }
  return {std::move(h)};
}

CorrelationMatrix decode(const EmbeddingMatrix& z) {
  DenseMatrix logits = matmul_nt(z.z, z.z);
  const std::size_t n = logits.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      logits(j, i) = logits(i, j);
    }
  }
  return CorrelationMatrix(sigmoid(logits));
}

double positive_weight(const SparseAdjacency& a) {
  const double n = static_cast<double>(a.dim());
  double off_diagonal = 0.0;
  for (const auto& e : a.entries()) {
    if (e.row != e.col) off_diagonal += 1.0;
  }
  if (off_diagonal == 0.0) {
    return 1.0;
  }
  return (n * n - off_diagonal) / off_diagonal;
}

double recon_loss(const CorrelationMatrix& a_hat, const SparseAdjacency& a) {
  const std::size_t n = a.dim();
  if (a_hat.dim() != n) {
    throw ShapeError("recon_loss: dimension mismatch");
  }
  if (n == 0) {
    return 0.0;
  }
  const double w = positive_weight(a);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double t = i == j ? 1.0 : a.at(i, j);
      const double p = a_hat.at(i, j);
      total += w * t * std::log(p) + (1.0 - t) * std::log1p(-p);
    }
  }
  return -total / static_cast<double>(n * n);
}

DenseMatrix discriminate(const DenseMatrix& rows, const DiscriminatorWeights& disc) {
  if (rows.cols() != disc.w1.rows()) {
    throw ShapeError("discriminate: rows have width " + std::to_string(rows.cols()) +
                     ", discriminator expects " + std::to_string(disc.w1.rows()));
  }
  EigenMatrix h = rows.eigen() * disc.w1.eigen();
  h.rowwise() += disc.b1.eigen().row(0);
  h = h.cwiseMax(0.0);
  EigenMatrix s = h * disc.w2.eigen();
  s.array() += disc.b2(0, 0);
  return sigmoid(DenseMatrix(std::move(s)));
}

GanLosses gan_losses(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.empty() || fake_scores.empty()) {
    throw ShapeError("gan_losses: empty score vector");
  }
  double log_real = 0.0;
  double log_not_fake = 0.0;
  double log_fake = 0.0;
  for (double r : real_scores) log_real += std::log(r);
  for (double f : fake_scores) {
    log_not_fake += std::log1p(-f);
    log_fake += std::log(f);
  }
  const double nr = static_cast<double>(real_scores.size());
  const double nf = static_cast<double>(fake_scores.size());
  return {-log_real / nr - log_not_fake / nf, -log_fake / nf};
}

TrainingInputs::TrainingInputs(const Graph& graph, DenseMatrix features)
    : x(std::move(features)),
      adjacency(graph.adjacency()),
      targets(add_self_loops(graph.adjacency())),
      propagation(gcn_propagation_matrix(graph.adjacency())),
      pos_weight(positive_weight(graph.adjacency())),
      edge_count(graph.edge_count()) {
  if (x.rows() != graph.node_count()) {
    throw ShapeError("TrainingInputs: feature rows do not match node count");
  }
}

LossEvaluation evaluate_recon_loss(const ModelState& state, const TrainingInputs& in,
                                   const Sample& sample) {
  Tape t;
  auto w = gcn_vars(t, state, true);
  Var z = encoder_forward(t, in, w, state.activations);
  const double n2 = static_cast<double>(in.node_count()) * static_cast<double>(in.node_count());
  Var loss;
  if (sample.negative_pairs.empty()) {
    loss = t.bce_with_logits(t.matmul_nt(z, z), in.targets, in.pos_weight, 1.0 / n2);
  } else {
    std::vector<std::pair<NodeId, NodeId>> pairs;
    std::vector<double> targets;
    std::vector<double> weights;
    for (const auto& e : in.targets.entries()) {
      pairs.emplace_back(e.row, e.col);
      targets.push_back(1.0);
      weights.push_back(in.pos_weight / n2);
    }
    const double neg_weight = (n2 - static_cast<double>(in.targets.nnz())) /
                              (static_cast<double>(sample.negative_pairs.size()) * n2);
    for (const auto& p : sample.negative_pairs) {
      pairs.push_back(p);
      targets.push_back(0.0);
      weights.push_back(neg_weight);
    }
    loss = t.weighted_bce_with_logits(t.pair_dot(z, std::move(pairs)), std::move(targets),
                                      std::move(weights));
  }
  t.backward(loss);
  return {t.scalar(loss), collect(t, w), std::nullopt};
}

LossEvaluation evaluate_disc_loss(const ModelState& state, const TrainingInputs& in,
                                  const Sample& sample) {
  Tape t;
  auto w = gcn_vars(t, state, false);
  Var z = encoder_forward(t, in, w, state.activations);
  DiscVars d = disc_vars(t, state.disc, true);
  Var real = real_logits(t, in, sample, d);
  Var fake = fake_logits(t, z, sample, d);
  Var loss = t.add(t.mean(t.softplus(t.neg(real))), t.mean(t.softplus(fake)));
  t.backward(loss);
  return {t.scalar(loss),
          {},
          DiscriminatorWeights{t.grad(d.w1), t.grad(d.b1), t.grad(d.w2), t.grad(d.b2)}};
}

LossEvaluation evaluate_gen_loss(const ModelState& state, const TrainingInputs& in,
                                 const Sample& sample) {
  Tape t;
  auto w = gcn_vars(t, state, true);
  Var z = encoder_forward(t, in, w, state.activations);
  DiscVars d = disc_vars(t, state.disc, false);
  Var fake = fake_logits(t, z, sample, d);
  Var loss = t.mean(t.softplus(t.neg(fake)));
  t.backward(loss);
  return {t.scalar(loss), collect(t, w), std::nullopt};
}

TrainResult train(const Graph& graph, DenseMatrix features, const EncoderConfig& config,
                  const EpochCallback& on_epoch) {
  if (graph.node_count() == 0) {
    throw DataError("train: graph has no nodes");
  }
  EncoderConfig cfg = config;
  if (cfg.layer_dims.empty()) {
    throw ShapeError("train: layer_dims is empty");
  }
  if (cfg.layer_dims.front() == 0) {
    cfg.layer_dims.front() = features.cols();
  }
  if (cfg.layer_dims.front() != features.cols()) {
    throw ShapeError("train: input width " + std::to_string(cfg.layer_dims.front()) +
                     " != feature width " + std::to_string(features.cols()));
  }
  cfg.validate();

  const TrainingInputs in(graph, std::move(features));
  TrainResult result;
  result.state = init_state(cfg, in.node_count());
  ModelState& state = result.state;

  const AdamConfig gen_adam{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps};
  // Both players of the adversarial game move at the discriminator rate.
  const AdamConfig adv_adam{cfg.disc_learning_rate, cfg.beta1, cfg.beta2, cfg.eps};
  const bool sampled = in.node_count() > cfg.dense_limit;
  Rng sampler(mix_seed(cfg.seed, 200));

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const Sample sample = sampled ? draw_sample(in, cfg, sampler) : Sample{};
    EpochRecord rec{epoch, 0.0, 0.0, 0.0};

    auto recon = evaluate_recon_loss(state, in, sample);
    rec.recon_loss = recon.value;
    check_finite(rec.recon_loss, epoch, "reconstruction loss", rec);
    adam_step(state.gcn_weights, recon.gcn_grads, state.recon_opt, gen_adam);

    if (cfg.gan_weight > 0.0) {
      auto disc = evaluate_disc_loss(state, in, sample);
      rec.disc_loss = disc.value;
      check_finite(rec.disc_loss, epoch, "discriminator loss", rec);
      disc_adam(state.disc, std::move(*disc.disc_grads), state.disc_opt, adv_adam);

      auto gen = evaluate_gen_loss(state, in, sample);
      rec.gen_loss = gen.value;
      check_finite(rec.gen_loss, epoch, "generator loss", rec);
      for (auto& g : gen.gcn_grads) {
        g.eigen() *= cfg.gan_weight;
      }
      adam_step(state.gcn_weights, gen.gcn_grads, state.gen_opt, adv_adam);
    }

    state.epoch = epoch;
    result.history.push_back(rec);
    if (on_epoch) {
      on_epoch(rec, state);
    }
  }

  result.embedding = encode(in.x, in.propagation, state);
  if (!result.embedding.z.all_finite()) {
    throw NumericError("train: embedding contains non-finite values");
  }
  return result;
}

}  // namespace kgt
