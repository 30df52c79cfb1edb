#include "kgtrace/error.hpp"
#include "kgtrace/graph.hpp"
#include "kgtrace/model.hpp"
#include "kgtrace/optim.hpp"
#include "kgtrace/persist.hpp"
#include "kgtrace/random.hpp"
#include "kgtrace/tape.hpp"

#include "oracles.hpp"

#include "expect.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace kgt;
using kgt::test_support::expect_close;

namespace {

EncoderConfig small_config(std::size_t input, std::uint64_t seed = 1) {
  EncoderConfig cfg;
  cfg.layer_dims = {input, 8, 4};
  cfg.disc_hidden = 6;
  cfg.seed = seed;
  return cfg;
}

Graph random_graph(std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) edges.push_back({i, j});
  return Graph(n, edges);
}

// Planted partition: dense blocks, sparse between them, block-biased sparse
// binary features.
struct Planted {
  Graph graph;
  DenseMatrix features;
};

Planted planted_partition(std::size_t n, std::size_t blocks, std::size_t m_feat,
                          double p_in, double p_out, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const double p = (i % blocks == j % blocks) ? p_in : p_out;
      if (uniform01(rng) < p) edges.push_back({i, j});
    }
  }
  DenseMatrix x(n, m_feat);
  const std::size_t span = m_feat / blocks;
  for (NodeId i = 0; i < n; ++i) {
    for (int k = 0; k < 18; ++k) {
      const bool home = uniform01(rng) < 0.7;
      const std::size_t col = home ? (i % blocks) * span + uniform_index(rng, span)
                                   : uniform_index(rng, m_feat);
      x(i, col) = 1.0;
    }
  }
  return {Graph(n, edges), std::move(x)};
}

}  // namespace

// ============================================================================
// Encoder and decoder
// ============================================================================

TEST(Encode, IdentityComposition) {
  ModelState s;
  s.gcn_weights = {DenseMatrix::identity(3)};
  s.activations = {Activation::Linear};
  const DenseMatrix x{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  const auto i3 = add_self_loops(build_adjacency({}, 3));
  EXPECT_EQ(encode(x, i3, s).z, x);
}

TEST(Encode, HandEvaluated) {
  ModelState s;
  s.gcn_weights = {DenseMatrix{{1}, {1}}};
  s.activations = {Activation::Linear};
  const std::vector<Edge> one{{0, 1}};
  const auto p = gcn_propagation_matrix(build_adjacency(one, 2));
  expect_close(encode(DenseMatrix::identity(2), p, s).z, DenseMatrix{{1}, {1}}, 1e-15);
}

TEST(Encode, ZeroWeightsGiveZero) {
  ModelState s;
  s.gcn_weights = {DenseMatrix(3, 4), DenseMatrix(4, 2, 1.0)};
  s.activations = {Activation::Relu, Activation::Linear};
  const std::vector<Edge> path{{0, 1}, {1, 2}};
  const auto p = gcn_propagation_matrix(build_adjacency(path, 3));
  EXPECT_EQ(encode(DenseMatrix(3, 3, 1.0), p, s).z, DenseMatrix(3, 2));
}

TEST(Encode, DimensionMismatch) {
  ModelState s;
  s.gcn_weights = {DenseMatrix(4, 2)};
  s.activations = {Activation::Linear};
  const auto p = add_self_loops(build_adjacency({}, 3));
  EXPECT_THROW(encode(DenseMatrix(3, 3), p, s), ShapeError);
  EXPECT_THROW(encode(DenseMatrix(2, 4), p, s), ShapeError);
}

TEST(Decode, Examples) {
  EXPECT_EQ(decode({DenseMatrix(3, 2)}).values(), DenseMatrix(3, 3, 0.5));

  const auto sat = decode({DenseMatrix{{10}, {10}}});
  EXPECT_GT(sat.at(0, 1), 1.0 - 1e-12);
  EXPECT_LT(sat.at(0, 1), 1.0);

  const auto a = decode({DenseMatrix{{1, 0}, {0, 1}}});
  const double s1 = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_NEAR(a.at(0, 0), s1, 1e-15);
  EXPECT_NEAR(a.at(1, 1), s1, 1e-15);
  EXPECT_EQ(a.at(0, 1), 0.5);
  EXPECT_NEAR(a.at(0, 0), 0.731, 5e-4);
}

TEST(Decode, SymmetricAndOpenInterval) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix z(12, 4);
    for (double& v : z.values()) v = uniform(rng, -30, 30);
    const auto a = decode({z});
    for (NodeId i = 0; i < 12; ++i) {
      for (NodeId j = 0; j < 12; ++j) {
        EXPECT_LE(std::abs(a.at(i, j) - a.at(j, i)), 1e-12);
        EXPECT_GT(a.at(i, j), 0.0);
        EXPECT_LT(a.at(i, j), 1.0);
      }
    }
  }
}

// ============================================================================
// Losses
// ============================================================================

TEST(ReconLoss, Examples) {
  // No edges: targets are I, density 1/2 at n = 2, w_pos = 1.
  const auto empty = build_adjacency({}, 2);
  EXPECT_EQ(positive_weight(empty), 1.0);
  EXPECT_NEAR(recon_loss(CorrelationMatrix(DenseMatrix(2, 2, 0.5)), empty), std::log(2.0),
              1e-15);

  // Single edge: targets all ones, w_pos = (4 - 2) / 2 = 1.
  const std::vector<Edge> one{{0, 1}};
  const auto a = build_adjacency(one, 2);
  EXPECT_EQ(positive_weight(a), 1.0);
  EXPECT_NEAR(recon_loss(CorrelationMatrix(DenseMatrix(2, 2, 0.9)), a), -std::log(0.9), 1e-15);

  EXPECT_LT(recon_loss(CorrelationMatrix(DenseMatrix{{1 - 1e-12, 1e-12}, {1e-12, 1 - 1e-12}}),
                       empty),
            1e-10);
}

TEST(ReconLoss, PositiveWeight) {
  const std::vector<Edge> path{{0, 1}, {1, 2}};
  EXPECT_EQ(positive_weight(build_adjacency(path, 3)), (9.0 - 4.0) / 4.0);
}

TEST(Discriminate, ZeroWeightsAndDeterminism) {
  DiscriminatorWeights d{DenseMatrix(3, 4), DenseMatrix(1, 4), DenseMatrix(4, 1),
                         DenseMatrix(1, 1)};
  EXPECT_EQ(discriminate(DenseMatrix(5, 3, 1.0), d), DenseMatrix(5, 1, 0.5));

  const auto s = init_state(small_config(3), 3);
  const DenseMatrix rows{{1, 0, 1}, {0.2, 0.7, 0.1}};
  EXPECT_EQ(discriminate(rows, s.disc), discriminate(rows, s.disc));
  EXPECT_THROW(discriminate(DenseMatrix(2, 4), s.disc), ShapeError);
}

TEST(Discriminate, LearnsSeparableToyRows) {
  const std::size_t n = 8;
  auto disc = init_state(small_config(n), n).disc;
  DenseMatrix rows(2 * n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) rows(r, c) = 1.0;
  std::vector<double> targets(2 * n, 0.0);
  std::fill(targets.begin(), targets.begin() + n, 1.0);
  const std::vector<double> weights(2 * n, 1.0 / (2 * n));

  AdamState opt;
  const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  for (int step = 0; step < 200; ++step) {
    Tape t;
    const Var w1 = t.parameter(disc.w1), b1 = t.parameter(disc.b1);
    const Var w2 = t.parameter(disc.w2), b2 = t.parameter(disc.b2);
    const Var h = t.relu(t.add_row(t.matmul(t.constant(rows), w1), b1));
    const Var logits = t.add_row(t.matmul(h, w2), b2);
    t.backward(t.weighted_bce_with_logits(logits, targets, weights));
    std::vector<DenseMatrix> params{disc.w1, disc.b1, disc.w2, disc.b2};
    const std::vector<DenseMatrix> grads{t.grad(w1), t.grad(b1), t.grad(w2), t.grad(b2)};
    adam_step(params, grads, opt, cfg);
    disc = {params[0], params[1], params[2], params[3]};
  }
  const auto scores = discriminate(rows, disc);
  double real = 0.0, fake = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    real += scores(r, 0) / n;
    fake += scores(n + r, 0) / n;
  }
  EXPECT_GT(real - fake, 0.5);
}

TEST(GanLosses, Examples) {
  const std::vector<double> half{0.5, 0.5};
  const auto even = gan_losses(half, half);
  EXPECT_NEAR(even.disc_loss, 2 * std::log(2.0), 1e-15);
  EXPECT_NEAR(even.gen_loss, std::log(2.0), 1e-15);

  const std::vector<double> real{0.8};
  const std::vector<double> fake{0.3};
  const auto g = gan_losses(real, fake);
  EXPECT_NEAR(g.disc_loss, -std::log(0.8) - std::log(0.7), 1e-15);
  EXPECT_NEAR(g.disc_loss, 0.580, 5e-4);
  EXPECT_NEAR(g.gen_loss, -std::log(0.3), 1e-15);

  const std::vector<double> sure_real{1 - 1e-12};
  const std::vector<double> sure_fake{1e-12};
  EXPECT_LT(gan_losses(sure_real, sure_fake).disc_loss, 1e-10);
  EXPECT_THROW(gan_losses({}, fake), ShapeError);
}

// ============================================================================
// Gradients
// ============================================================================

TEST(Gradients, MatchFiniteDifferencesOnSixNodes) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Graph g = random_graph(6, 0.4, 40 + seed);
    Rng rng(seed);
    DenseMatrix x(6, 5);
    for (double& v : x.values()) v = uniform(rng, -1, 1);
    const TrainingInputs in(g, x);
    const auto report = oracle::check_model_gradients(init_state(small_config(5, seed), 6), in);
    EXPECT_LT(report.recon, 1e-4) << "seed " << seed;
    EXPECT_LT(report.gen, 1e-4) << "seed " << seed;
    EXPECT_LT(report.disc, 1e-4) << "seed " << seed;
    EXPECT_GT(report.checked, 0u);
  }
}

TEST(Gradients, ReconValueMatchesDirectLoss) {
  const Graph g = random_graph(7, 0.3, 5);
  const TrainingInputs in(g, DenseMatrix::identity(7));
  const auto state = init_state(small_config(7), 7);
  const auto a_hat = decode(encode(in.x, in.propagation, state));
  EXPECT_NEAR(evaluate_recon_loss(state, in).value, recon_loss(a_hat, g.adjacency()), 1e-12);
}

TEST(Gradients, GanValuesMatchDirectLoss) {
  const Graph g = random_graph(7, 0.3, 6);
  const TrainingInputs in(g, DenseMatrix::identity(7));
  const auto state = init_state(small_config(7), 7);
  const auto a_hat = decode(encode(in.x, in.propagation, state));
  const auto real = discriminate(in.targets.to_dense(), state.disc);
  const auto fake = discriminate(a_hat.values(), state.disc);
  const auto direct = gan_losses(real.values(), fake.values());
  EXPECT_NEAR(evaluate_disc_loss(state, in).value, direct.disc_loss, 1e-12);
  EXPECT_NEAR(evaluate_gen_loss(state, in).value, direct.gen_loss, 1e-12);
}

// ============================================================================
// Training
// ============================================================================

TEST(Train, SingleEdgeBecomesConfident) {
  const std::vector<Edge> one{{0, 1}};
  EncoderConfig cfg;
  cfg.epochs = 50;
  const auto r = train(Graph(2, one), DenseMatrix::identity(2), cfg);
  ASSERT_EQ(r.history.size(), 50u);
  EXPECT_GT(decode(r.embedding).at(0, 1), 0.9);
}

TEST(Train, ZeroEpochsIsInitialForwardPass) {
  const Graph g = random_graph(10, 0.3, 7);
  EncoderConfig cfg = small_config(10);
  cfg.epochs = 0;
  const auto r = train(g, DenseMatrix::identity(10), cfg);
  const auto init = init_state(cfg, 10);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.state.gcn_weights, init.gcn_weights);
  EXPECT_EQ(r.state.disc.w1, init.disc.w1);
  const TrainingInputs in(g, DenseMatrix::identity(10));
  EXPECT_EQ(r.embedding.z, encode(in.x, in.propagation, init).z);
}

TEST(Train, Reproducible) {
  const Graph g = random_graph(20, 0.2, 8);
  EncoderConfig cfg = small_config(20, 4);
  cfg.epochs = 30;
  const auto a = train(g, DenseMatrix::identity(20), cfg);
  const auto b = train(g, DenseMatrix::identity(20), cfg);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].recon_loss, b.history[i].recon_loss);
    EXPECT_EQ(a.history[i].disc_loss, b.history[i].disc_loss);
    EXPECT_EQ(a.history[i].gen_loss, b.history[i].gen_loss);
  }
  EXPECT_EQ(a.embedding.z, b.embedding.z);

  cfg.seed = 5;
  EXPECT_NE(train(g, DenseMatrix::identity(20), cfg).embedding.z, a.embedding.z);
}

TEST(Train, ZeroGanWeightFreezesDiscriminator) {
  const Graph g = random_graph(15, 0.25, 9);
  EncoderConfig cfg = small_config(15, 2);
  cfg.epochs = 20;
  cfg.gan_weight = 0.0;
  const auto init = init_state(cfg, 15);
  const auto r = train(g, DenseMatrix::identity(15), cfg);
  EXPECT_EQ(r.state.disc.w1, init.disc.w1);
  EXPECT_EQ(r.state.disc.b1, init.disc.b1);
  EXPECT_EQ(r.state.disc.w2, init.disc.w2);
  EXPECT_EQ(r.state.disc.b2, init.disc.b2);
  EXPECT_NE(r.state.gcn_weights, init.gcn_weights);
  for (const auto& rec : r.history) EXPECT_EQ(rec.disc_loss, 0.0);

  cfg.gan_weight = 1.0;
  const auto adv = train(g, DenseMatrix::identity(15), cfg);
  EXPECT_NE(adv.state.disc.w1, init.disc.w1);
}

TEST(Train, CallbackSeesEveryEpoch) {
  const Graph g = random_graph(8, 0.3, 10);
  EncoderConfig cfg = small_config(8);
  cfg.epochs = 5;
  std::vector<std::size_t> seen;
  train(g, DenseMatrix::identity(8), cfg,
        [&](const EpochRecord& rec, const ModelState& s) {
          seen.push_back(rec.epoch);
          EXPECT_EQ(s.epoch, rec.epoch);
        });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3, 4, 5}));
}

TEST(Train, ConfigValidation) {
  const Graph g = random_graph(5, 0.5, 11);
  EncoderConfig cfg;
  cfg.layer_dims = {5, 1};
  EXPECT_THROW(train(g, DenseMatrix::identity(5), cfg), ShapeError);
  cfg.layer_dims = {5, 8, 1};
  EXPECT_THROW(train(g, DenseMatrix::identity(5), cfg), ShapeError);
  cfg.layer_dims = {4, 8, 2};
  EXPECT_THROW(train(g, DenseMatrix::identity(5), cfg), ShapeError);
  EXPECT_THROW(train(Graph(), DenseMatrix(), EncoderConfig{}), DataError);
}

TEST(Train, SampledModeIsDeterministic) {
  const Graph g = random_graph(40, 0.1, 12);
  EncoderConfig cfg = small_config(40, 3);
  cfg.epochs = 15;
  cfg.dense_limit = 10;
  cfg.disc_batch_rows = 8;
  const auto a = train(g, DenseMatrix::identity(40), cfg);
  const auto b = train(g, DenseMatrix::identity(40), cfg);
  EXPECT_EQ(a.embedding.z, b.embedding.z);
  EXPECT_TRUE(a.embedding.z.all_finite());
  EXPECT_LT(a.history.back().recon_loss, a.history.front().recon_loss);
}

TEST(Train, SampledReconIsUnbiasedAtFullNegatives) {
  // With every non-target pair listed once, the sampled estimator equals
  // the dense loss.
  const Graph g = random_graph(9, 0.3, 13);
  const TrainingInputs in(g, DenseMatrix::identity(9));
  const auto state = init_state(small_config(9), 9);
  Sample s;
  for (NodeId i = 0; i < 9; ++i)
    for (NodeId j = 0; j < 9; ++j)
      if (in.targets.at(i, j) == 0.0) s.negative_pairs.emplace_back(i, j);
  const auto dense = evaluate_recon_loss(state, in);
  const auto sampled = evaluate_recon_loss(state, in, s);
  EXPECT_NEAR(sampled.value, dense.value, 1e-12);
  for (std::size_t l = 0; l < dense.gcn_grads.size(); ++l)
    EXPECT_LT(oracle::max_relative_error(sampled.gcn_grads[l], dense.gcn_grads[l]), 1e-9);
}

TEST(Train, CitationScaleProxyLossDecreases) {
  // 2708 nodes in seven blocks with 1433 binary features, the size of the
  // Cora citation graph.
  const auto p = planted_partition(2708, 7, 1433, 0.009, 0.0002, 21);
  ASSERT_GT(p.graph.edge_count(), 3000u);
  EncoderConfig cfg;
  cfg.epochs = 10;
  const auto start = std::chrono::steady_clock::now();
  const auto r = train(p.graph, p.features, cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    EXPECT_LT(r.history[i].recon_loss, r.history[i - 1].recon_loss) << "epoch " << i + 1;
  }
  // 200 default epochs must fit well inside ten minutes.
  EXPECT_LT(secs * 20, 600.0) << secs << " s for 10 epochs";
  RecordProperty("seconds_per_epoch", std::to_string(secs / 10));
}

// ============================================================================
// Persistence
// ============================================================================

TEST(Persist, ConfigRoundTrip) {
  EncoderConfig cfg = small_config(11, 77);
  cfg.gan_weight = 0.25;
  cfg.epochs = 13;
  const auto back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(back.layer_dims, cfg.layer_dims);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.gan_weight, 0.25);
  EXPECT_EQ(back.epochs, 13u);
  auto j = config_to_json(cfg);
  j["learning_rat"] = 0.1;
  EXPECT_THROW(config_from_json(j), DataError);
}

TEST(Persist, ModelRoundTrip) {
  const Graph g = random_graph(12, 0.3, 14);
  EncoderConfig cfg = small_config(12, 6);
  cfg.epochs = 5;
  const auto r = train(g, DenseMatrix::identity(12), cfg);
  ModelFile mf{cfg, {{"kind", "kg"}}, "symbols.tsv", r.state, r.embedding};
  std::filesystem::create_directories(KGTRACE_TEST_TMP);
  const auto path = std::filesystem::path(KGTRACE_TEST_TMP) / "model.kgt";
  save_model(path, mf);
  const auto back = load_model(path);
  EXPECT_EQ(back.embedding.z, r.embedding.z);
  EXPECT_EQ(back.state.gcn_weights, r.state.gcn_weights);
  EXPECT_EQ(back.state.disc.w1, r.state.disc.w1);
  EXPECT_EQ(back.state.disc.b2, r.state.disc.b2);
  EXPECT_EQ(back.state.epoch, 5u);
  EXPECT_EQ(back.dataset, mf.dataset);
  EXPECT_EQ(back.symbols, "symbols.tsv");
  EXPECT_EQ(back.config.layer_dims, cfg.layer_dims);
}

TEST(Persist, RejectsCorruptFiles) {
  std::filesystem::create_directories(KGTRACE_TEST_TMP);
  const auto path = std::filesystem::path(KGTRACE_TEST_TMP) / "corrupt.kgt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE and some bytes";
  }
  EXPECT_THROW(load_model(path), DataError);
  EXPECT_THROW(load_model(path.string() + ".missing"), DataError);
}
