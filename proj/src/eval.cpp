#include "kgtrace/eval.hpp"
#include "kgtrace/error.hpp"
#include "kgtrace/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace kgt {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

DenseMatrix kmeanspp_seed(const DenseMatrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  DenseMatrix centroids(k, x.cols());
  std::vector<bool> chosen(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t c, std::size_t idx) {
    chosen[idx] = true;
    centroids.eigen().row(c) = x.eigen().row(idx);
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sq_dist(x.row(i), centroids.row(c)));
    }
  };

  take(0, uniform_index(rng, n));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : best[i];
    std::size_t pick = n;
    if (total > 0.0) {
      double r = uniform01(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || best[i] == 0.0) continue;
        pick = i;
        r -= best[i];
        if (r < 0.0) break;
      }
    }
    if (pick == n) {
      // Every remaining point coincides with a centroid; pick uniformly.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) rest.push_back(i);
      }
      pick = rest[uniform_index(rng, rest.size())];
    }
    take(c, pick);
  }
  return centroids;
}

// Assigns each point to its nearest centroid (lower index on ties).
double assign(const DenseMatrix& x, const DenseMatrix& centroids, std::vector<int>& labels,
              std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = sq_dist(x.row(i), centroids.row(c));
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
    dist[i] = best;
    inertia += best;
  }
  return inertia;
}

std::vector<int> densify(std::span<const int> labels) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [_, id] : ids) id = next++;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids[l]);
  return out;
}

}  // namespace

ClusterAssignment kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed,
                         std::size_t max_iters) {
  const std::size_t n = points.rows();
  if (k == 0) {
    throw ShapeError("kmeans: k must be at least 1");
  }
  if (k > n) {
    throw ShapeError("kmeans: k = " + std::to_string(k) + " exceeds " + std::to_string(n) +
                     " points");
  }
  Rng rng(seed);
  ClusterAssignment out;
  out.centroids = kmeanspp_seed(points, k, rng);
  out.labels.assign(n, -1);
  std::vector<int> labels(n);
  std::vector<double> dist(n);

  for (std::size_t it = 0; it < std::max<std::size_t>(1, max_iters); ++it) {
    const double inertia = assign(points, out.centroids, labels, dist);
    out.inertia = inertia;
    out.inertia_trace.push_back(inertia);
    out.iterations = it + 1;
    const bool stable = labels == out.labels;
    out.labels = labels;
    if (stable) {
      break;
    }

    std::vector<std::size_t> counts(k, 0);
    DenseMatrix sums(k, points.cols());
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[labels[i]];
      sums.eigen().row(labels[i]) += points.eigen().row(i);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        out.centroids.eigen().row(c) = sums.eigen().row(c) / static_cast<double>(counts[c]);
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (dist[i] > dist[far]) far = i;
      }
      out.centroids.eigen().row(c) = points.eigen().row(far);
      dist[far] = 0.0;
    }
  }
  return out;
}

ClusterAssignment kmeans_best_of(const DenseMatrix& points, std::size_t k,
                                 std::uint64_t seed, std::size_t restarts,
                                 std::size_t max_iters) {
  ClusterAssignment best;
  bool have = false;
  Rng seeds(seed);
  for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
    auto run = kmeans(points, k, seeds(), max_iters);
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

std::vector<std::size_t> hungarian_max(const std::vector<std::vector<double>>& weight) {
  const std::size_t n = weight.size();
  for (const auto& row : weight) {
    if (row.size() != n) throw ShapeError("hungarian_max: matrix must be square");
  }
  if (n == 0) return {};
  double top = 0.0;
  for (const auto& row : weight) {
    for (double w : row) top = std::max(top, w);
  }
  // Shortest augmenting path formulation on costs top - w, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = (top - weight[i0 - 1][j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) {
    assignment[p[j] - 1] = j - 1;
  }
  return assignment;
}

double cluster_accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("cluster_accuracy: " + std::to_string(predicted.size()) +
                     " predictions for " + std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) {
    throw ShapeError("cluster_accuracy: no labels");
  }
  const auto pred = densify(predicted);
  const auto gold = densify(truth);
  const std::size_t kp = static_cast<std::size_t>(*std::max_element(pred.begin(), pred.end())) + 1;
  const std::size_t kt = static_cast<std::size_t>(*std::max_element(gold.begin(), gold.end())) + 1;
  const std::size_t k = std::max(kp, kt);
  std::vector<std::vector<double>> counts(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    counts[pred[i]][gold[i]] += 1.0;
  }
  const auto match = hungarian_max(counts);
  double hits = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    hits += counts[c][match[c]];
  }
  return hits / static_cast<double>(pred.size());
}

EdgeSplit split_edges(const Graph& graph, double test_ratio, std::uint64_t seed) {
  if (!(test_ratio > 0.0 && test_ratio < 1.0)) {
    throw ShapeError("split_edges: ratio must lie in (0, 1)");
  }
  const std::size_t m = graph.edge_count();
  const auto n_test = static_cast<std::size_t>(std::llround(test_ratio * static_cast<double>(m)));
  if (n_test >= m) {
    throw DataError("split_edges: ratio " + std::to_string(test_ratio) + " leaves no training edges");
  }
  if (n_test == 0) {
    throw DataError("split_edges: ratio " + std::to_string(test_ratio) + " holds out no edges");
  }
  const std::size_t n = graph.node_count();
  const std::size_t non_edges = n * (n - 1) / 2 - m;
  if (non_edges < n_test) {
    throw DataError("split_edges: graph has too few non-edges for negative sampling");
  }

  std::vector<Edge> order(graph.edges().begin(), graph.edges().end());
  Rng rng(seed);
  shuffle(order, rng);

  EdgeSplit split;
  split.ratio = test_ratio;
  split.test_pos.assign(order.begin(), order.begin() + static_cast<long>(n_test));
  split.train_edges.assign(order.begin() + static_cast<long>(n_test), order.end());
  std::sort(split.train_edges.begin(), split.train_edges.end());

  Rng neg_rng(seed ^ 0x6e65676174697665ULL);
  std::set<Edge> taken;
  while (split.test_neg.size() < n_test) {
    const NodeId a = uniform_index(neg_rng, n);
    const NodeId b = uniform_index(neg_rng, n);
    if (a == b || graph.has_edge(a, b)) continue;
    const Edge e = canonical(a, b);
    if (taken.insert(e).second) {
      split.test_neg.push_back(e);
    }
  }
  return split;
}

double auc_score(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty()) {
    throw ShapeError("auc_score: need at least one positive and one negative");
  }
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  for (double s : positive) all.push_back({s, true});
  for (double s : negative) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.score < b.score; });

  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    // Ranks i+1 .. j share their mean.
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].positive) rank_sum += mid;
    }
    i = j;
  }
  const double np = static_cast<double>(positive.size());
  const double nn = static_cast<double>(negative.size());
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

double average_precision(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty()) {
    throw ShapeError("average_precision: need at least one positive");
  }
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  for (double s : positive) all.push_back({s, true});
  for (double s : negative) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.score > b.score; });

  const double total_pos = static_cast<double>(positive.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  double ap = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t gained = 0;
    std::size_t j = i;
    for (; j < all.size() && all[j].score == all[i].score; ++j) {
      if (all[j].positive) {
        ++gained;
      } else {
        ++fp;
      }
    }
    tp += gained;
    if (gained > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += static_cast<double>(gained) * precision;
    }
    i = j;
  }
  return ap / total_pos;
}

LinkMetrics ap_auc(std::span<const double> positive, std::span<const double> negative) {
  return {average_precision(positive, negative), auc_score(positive, negative)};
}

LinkMetrics ap_auc(const CorrelationMatrix& a_hat, const EdgeSplit& split) {
  std::vector<double> pos, neg;
  for (const auto& e : split.test_pos) pos.push_back(a_hat.at(e.u, e.v));
  for (const auto& e : split.test_neg) neg.push_back(a_hat.at(e.u, e.v));
  return ap_auc(pos, neg);
}

LinkMetrics ap_auc(const EmbeddingMatrix& z, const EdgeSplit& split) {
  auto score = [&](const Edge& e) {
    return sigmoid(z.z.eigen().row(e.u).dot(z.z.eigen().row(e.v)));
  };
  std::vector<double> pos, neg;
  for (const auto& e : split.test_pos) pos.push_back(score(e));
  for (const auto& e : split.test_neg) neg.push_back(score(e));
  return ap_auc(pos, neg);
}

void export_embeddings(const EmbeddingMatrix& z, std::span<const int> labels,
                       const std::filesystem::path& path) {
  if (!labels.empty() && labels.size() != z.z.rows()) {
    throw ShapeError("export_embeddings: label count does not match rows");
  }
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write embeddings to " + path.string());
  }
  out << "node_id\tlabel";
  for (std::size_t c = 0; c < z.z.cols(); ++c) out << "\tz_" << (c + 1);
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < z.z.rows(); ++r) {
    out << r << '\t' << (labels.empty() ? -1 : labels[r]);
    for (double v : z.z.row(r)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << '\t' << buf;
    }
    out << '\n';
  }
  if (!out) {
    throw DataError("failed writing embeddings to " + path.string());
  }
}

std::vector<EmbeddingRow> read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open embeddings file " + path.string());
  }
  std::vector<EmbeddingRow> rows;
  std::string line;
  std::getline(in, line);  // header
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tok;
    EmbeddingRow row{};
    try {
      std::getline(fields, tok, '\t');
      row.id = std::stoull(tok);
      std::getline(fields, tok, '\t');
      row.label = std::stoi(tok);
      while (std::getline(fields, tok, '\t')) row.values.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace kgt
