#pragma once

#include "kgtrace/matrix.hpp"

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgt {

using NodeId = std::size_t;

// Undirected edge; canonical form has u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge canonical(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

struct SparseEntry {
  NodeId row = 0;
  NodeId col = 0;
  double value = 0.0;
  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Symmetric n x n matrix in coordinate form, sorted row-major.
class SparseAdjacency {
 public:
  SparseAdjacency() = default;

  // Sorts the entries, then checks range, uniqueness and symmetry.
  static SparseAdjacency from_entries(std::size_t n, std::vector<SparseEntry> entries);
  static SparseAdjacency zeros(std::size_t n) { return from_entries(n, {}); }

  std::size_t dim() const { return n_; }
  std::size_t nnz() const { return entries_.size(); }
  std::span<const SparseEntry> entries() const { return entries_; }
  std::span<const SparseEntry> row(NodeId r) const;
  double at(NodeId r, NodeId c) const;

  bool zero_diagonal() const;
  bool unit_diagonal() const;

  DenseMatrix to_dense() const;

  friend bool operator==(const SparseAdjacency&, const SparseAdjacency&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<SparseEntry> entries_;
  std::vector<std::size_t> row_ptr_{0};
};

struct DegreeDiagonal {
  std::vector<double> d;
  std::size_t dim() const { return d.size(); }
};

// Symmetric 0/1 adjacency; duplicates and reversed pairs collapse.
SparseAdjacency build_adjacency(std::span<const Edge> edges, std::size_t n);

// A + I; rejects input that already has a nonzero diagonal.
SparseAdjacency add_self_loops(const SparseAdjacency& a);

DegreeDiagonal degree_of(const SparseAdjacency& a);

// D^-1/2 A D^-1/2.
SparseAdjacency normalize_symmetric(const SparseAdjacency& a, const DegreeDiagonal& d);

// normalize_symmetric(add_self_loops(a), degree_of(add_self_loops(a))).
SparseAdjacency gcn_propagation_matrix(const SparseAdjacency& a);

// Canonical (u < v) edges of the strict upper triangle.
std::vector<Edge> edges_of(const SparseAdjacency& a);

// Immutable undirected simple graph with optional node features.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t n, std::span<const Edge> edges,
        std::optional<DenseMatrix> features = std::nullopt);

  std::size_t node_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  const SparseAdjacency& adjacency() const { return adjacency_; }

  bool has_features() const { return features_.has_value(); }
  const std::optional<DenseMatrix>& features() const { return features_; }

  bool has_edge(NodeId a, NodeId b) const;
  std::vector<NodeId> neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  SparseAdjacency adjacency_;
  std::optional<DenseMatrix> features_;
};

// Maps external string ids to dense indices in first-seen order.
class SymbolTable {
 public:
  // Returns the existing index or assigns the next one.
  NodeId intern(const std::string& external_id);
  std::optional<NodeId> find(const std::string& external_id) const;
  const std::string& name(NodeId id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  std::span<const std::string> names() const { return names_; }

  // `external_id<TAB>index` per line.
  void write(const std::filesystem::path& path) const;
  static SymbolTable read(const std::filesystem::path& path);

 private:
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::string> names_;
};

// `src<TAB>dst` per line, `#` comments. Ids are interned into `symbols`.
Graph read_edge_list(const std::filesystem::path& path, SymbolTable& symbols);

}  // namespace kgt
