#pragma once

#include "kgtrace/graph.hpp"
#include "kgtrace/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace kgt {

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  std::uint64_t tape = 0;
};

// Matrix-valued reverse-mode tape. Every operation evaluates eagerly and
// records a closure that propagates the output gradient to its inputs.
// Operations whose inputs are all constants record no backward step.
//
// Sparse matrices passed by reference must outlive the tape.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var parameter(DenseMatrix value);
  Var constant(DenseMatrix value);

  const DenseMatrix& value(Var v) const;
  // Gradient after backward(); a zero matrix for nodes the loss never reached.
  DenseMatrix grad(Var v) const;
  double scalar(Var v) const;
  bool is_parameter(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var spmm(const SparseAdjacency& s, Var m);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var neg(Var a);
  Var scale(Var a, double k);
  Var add(Var a, Var b);
  Var add_row(Var m, Var bias);  // broadcast a 1 x c bias over rows
  Var sum(Var a);
  Var mean(Var a);
  Var gather_rows(Var a, std::vector<NodeId> rows);

  // norm * sum_ij [ w_pos * t_ij * softplus(-x_ij) + (1 - t_ij) * softplus(x_ij) ]
  // with 0/1 targets t given sparsely: the weighted binary cross-entropy of
  // sigmoid(x) against t, evaluated without forming sigmoid(x).
  Var bce_with_logits(Var logits, const SparseAdjacency& targets, double pos_weight,
                      double norm);

  // Column vector of row dot products z_i . z_j for each pair.
  Var pair_dot(Var z, std::vector<std::pair<NodeId, NodeId>> pairs);

  // sum_k w_k * [ t_k * softplus(-x_k) + (1 - t_k) * softplus(x_k) ] over a
  // column vector of logits with per-entry targets and weights.
  Var weighted_bce_with_logits(Var logits, std::vector<double> targets,
                               std::vector<double> weights);

  // Reverse sweep from a 1 x 1 node.
  void backward(Var loss);

 private:
  struct Node {
    DenseMatrix value;
    DenseMatrix grad;
    bool parameter = false;
    bool needs_grad = false;
    std::function<void(Tape&)> back;
  };

  std::size_t check(Var v) const;
  Var push(DenseMatrix value, bool needs_grad, std::function<void(Tape&)> back);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  void accumulate(Var v, const DenseMatrix& g);
  const DenseMatrix& upstream(std::size_t id) const { return nodes_[id].grad; }

  std::uint64_t id_;
  std::vector<Node> nodes_;
};

}  // namespace kgt
