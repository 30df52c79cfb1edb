#include "kgtrace/graph.hpp"
#include "kgtrace/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kgt {

SparseAdjacency SparseAdjacency::from_entries(std::size_t n,
                                              std::vector<SparseEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.row >= n || e.col >= n) {
      throw ShapeError("SparseAdjacency: entry (" + std::to_string(e.row) + "," +
                       std::to_string(e.col) + ") outside " + std::to_string(n));
    }
    if (i > 0 && entries[i - 1].row == e.row && entries[i - 1].col == e.col) {
      throw ShapeError("SparseAdjacency: duplicate coordinate");
    }
  }

  SparseAdjacency out;
  out.n_ = n;
  out.entries_ = std::move(entries);
  out.row_ptr_.assign(n + 1, 0);
  for (const auto& e : out.entries_) {
    ++out.row_ptr_[e.row + 1];
  }
  for (std::size_t r = 0; r < n; ++r) {
    out.row_ptr_[r + 1] += out.row_ptr_[r];
  }
  for (const auto& e : out.entries_) {
    if (out.at(e.col, e.row) != e.value) {
      throw ShapeError("SparseAdjacency: matrix is not symmetric");
    }
  }
  return out;
}

std::span<const SparseEntry> SparseAdjacency::row(NodeId r) const {
  if (r >= n_) {
    throw ShapeError("SparseAdjacency::row out of range");
  }
  return std::span<const SparseEntry>(entries_).subspan(
      row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]);
}

double SparseAdjacency::at(NodeId r, NodeId c) const {
  auto entries = row(r);
  auto it = std::lower_bound(entries.begin(), entries.end(), c,
                             [](const SparseEntry& e, NodeId col) { return e.col < col; });
  return it != entries.end() && it->col == c ? it->value : 0.0;
}

bool SparseAdjacency::zero_diagonal() const {
  return std::none_of(entries_.begin(), entries_.end(),
                      [](const auto& e) { return e.row == e.col && e.value != 0.0; });
}

bool SparseAdjacency::unit_diagonal() const {
  for (NodeId i = 0; i < n_; ++i) {
    if (at(i, i) != 1.0) {
      return false;
    }
  }
  return true;
}

DenseMatrix SparseAdjacency::to_dense() const {
  DenseMatrix out(n_, n_);
  for (const auto& e : entries_) {
    out(e.row, e.col) = e.value;
  }
  return out;
}

SparseAdjacency build_adjacency(std::span<const Edge> edges, std::size_t n) {
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw DataError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                      ") has an endpoint outside [0, " + std::to_string(n) + ")");
    }
    if (e.u == e.v) {
      throw DataError("self-loop on node " + std::to_string(e.u));
    }
    canon.push_back(canonical(e.u, e.v));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  std::vector<SparseEntry> entries;
  entries.reserve(2 * canon.size());
  for (const auto& e : canon) {
    entries.push_back({e.u, e.v, 1.0});
    entries.push_back({e.v, e.u, 1.0});
  }
  return SparseAdjacency::from_entries(n, std::move(entries));
}

SparseAdjacency add_self_loops(const SparseAdjacency& a) {
  if (!a.zero_diagonal()) {
    throw ShapeError("add_self_loops: input already has a nonzero diagonal");
  }
  std::vector<SparseEntry> entries;
  entries.reserve(a.nnz() + a.dim());
  for (const auto& e : a.entries()) {
    if (e.row != e.col) {
      entries.push_back(e);
    }
  }
  for (NodeId i = 0; i < a.dim(); ++i) {
    entries.push_back({i, i, 1.0});
  }
  return SparseAdjacency::from_entries(a.dim(), std::move(entries));
}

DegreeDiagonal degree_of(const SparseAdjacency& a) {
  DegreeDiagonal out{std::vector<double>(a.dim(), 0.0)};
  for (const auto& e : a.entries()) {
    out.d[e.row] += e.value;
  }
  return out;
}

SparseAdjacency normalize_symmetric(const SparseAdjacency& a, const DegreeDiagonal& d) {
  if (d.dim() != a.dim()) {
    throw ShapeError("normalize_symmetric: degree vector length mismatch");
  }
  std::vector<double> inv_sqrt(d.dim());
  for (std::size_t i = 0; i < d.dim(); ++i) {
    if (!(d.d[i] > 0.0)) {
      throw DataError("normalize_symmetric: zero degree at node " + std::to_string(i));
    }
    inv_sqrt[i] = 1.0 / std::sqrt(d.d[i]);
  }
  std::vector<SparseEntry> entries(a.entries().begin(), a.entries().end());
  for (auto& e : entries) {
    // Same operand order for (i,j) and (j,i) keeps the result exactly symmetric.
    const double scale = e.row < e.col ? inv_sqrt[e.row] * inv_sqrt[e.col]
                                       : inv_sqrt[e.col] * inv_sqrt[e.row];
    e.value *= scale;
  }
  return SparseAdjacency::from_entries(a.dim(), std::move(entries));
}

SparseAdjacency gcn_propagation_matrix(const SparseAdjacency& a) {
  auto looped = add_self_loops(a);
  return normalize_symmetric(looped, degree_of(looped));
}

std::vector<Edge> edges_of(const SparseAdjacency& a) {
  std::vector<Edge> out;
  for (const auto& e : a.entries()) {
    if (e.row < e.col && e.value != 0.0) {
      out.push_back({e.row, e.col});
    }
  }
  return out;
}

Graph::Graph(std::size_t n, std::span<const Edge> edges,
             std::optional<DenseMatrix> features)
    : n_(n), adjacency_(build_adjacency(edges, n)), features_(std::move(features)) {
  edges_ = edges_of(adjacency_);
  if (features_ && features_->rows() != n_) {
    throw ShapeError("Graph: feature matrix has " + std::to_string(features_->rows()) +
                     " rows for " + std::to_string(n_) + " nodes");
  }
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  return a < n_ && b < n_ && adjacency_.at(a, b) != 0.0;
}

std::vector<NodeId> Graph::neighbors(NodeId v) const {
  if (v >= n_) {
    throw ShapeError("neighbors: node " + std::to_string(v) + " out of range");
  }
  std::vector<NodeId> out;
  for (const auto& e : adjacency_.row(v)) {
    out.push_back(e.col);
  }
  return out;
}

std::size_t Graph::degree(NodeId v) const { return adjacency_.row(v).size(); }

NodeId SymbolTable::intern(const std::string& external_id) {
  auto [it, inserted] = index_.try_emplace(external_id, names_.size());
  if (inserted) {
    names_.push_back(external_id);
  }
  return it->second;
}

std::optional<NodeId> SymbolTable::find(const std::string& external_id) const {
  auto it = index_.find(external_id);
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

void SymbolTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write symbol table " + path.string());
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    out << names_[i] << '\t' << i << '\n';
  }
}

SymbolTable SymbolTable::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open symbol table " + path.string());
  }
  SymbolTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": missing tab");
    }
    const std::string name = line.substr(0, tab);
    std::size_t index = 0;
    try {
      index = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad index");
    }
    if (index != table.size() || table.find(name)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": indices must be dense, unique and in order");
    }
    table.intern(name);
  }
  return table;
}

Graph read_edge_list(const std::filesystem::path& path, SymbolTable& symbols) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open edge list " + path.string());
  }
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected `src<TAB>dst`");
    }
    const NodeId a = symbols.intern(line.substr(0, tab));
    const NodeId b = symbols.intern(line.substr(tab + 1));
    if (a == b) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": self-loop");
    }
    edges.push_back({a, b});
  }
  return Graph(symbols.size(), edges);
}

}  // namespace kgt
