#include "kgtrace/tape.hpp"
#include "kgtrace/error.hpp"
#include "kgtrace/tensor.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace kgt {

namespace {

std::atomic<std::uint64_t> next_tape_id{1};

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                     "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                     "x" + std::to_string(b.cols()));
  }
}

// softplus(x) and sigmoid(x) from a single exp.
struct LogisticTerms {
  double softplus_pos;  // softplus(x)
  double softplus_neg;  // softplus(-x)
  double sig;           // sigmoid(x)
};

inline LogisticTerms logistic_terms(double x) {
  const double e = std::exp(-std::abs(x));
  const double l = std::log1p(e);
  const double relu_pos = x > 0.0 ? x : 0.0;
  const double relu_neg = x < 0.0 ? -x : 0.0;
  const double sig = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  return {relu_pos + l, relu_neg + l, sig};
}

}  // namespace

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

std::size_t Tape::check(Var v) const {
  if (v.tape != id_ || v.id >= nodes_.size()) {
    throw ShapeError("Var does not belong to this tape");
  }
  return v.id;
}

Var Tape::push(DenseMatrix value, bool needs_grad, std::function<void(Tape&)> back) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  if (needs_grad) {
    node.back = std::move(back);
  }
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1, id_};
}

Var Tape::parameter(DenseMatrix value) {
  Var v = push(std::move(value), true, nullptr);
  nodes_[v.id].parameter = true;
  return v;
}

Var Tape::constant(DenseMatrix value) { return push(std::move(value), false, nullptr); }

const DenseMatrix& Tape::value(Var v) const { return nodes_[check(v)].value; }

DenseMatrix Tape::grad(Var v) const {
  const auto& node = nodes_[check(v)];
  if (node.grad.empty()) {
    return DenseMatrix(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

double Tape::scalar(Var v) const {
  const auto& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) {
    throw ShapeError("Tape::scalar on a non-scalar node");
  }
  return m(0, 0);
}

bool Tape::is_parameter(Var v) const { return nodes_[check(v)].parameter; }

void Tape::accumulate(Var v, const DenseMatrix& g) {
  auto& node = nodes_[v.id];
  if (!node.needs_grad) {
    return;
  }
  if (node.grad.empty()) {
    node.grad = g;
  } else {
    node.grad.eigen() += g.eigen();
  }
}

Var Tape::matmul(Var a, Var b) {
  check(a);
  check(b);
  const std::size_t self = nodes_.size();
  return push(kgt::matmul(value(a), value(b)), needs(a) || needs(b),
              [a, b, self](Tape& t) {
                const auto& g = t.upstream(self);
                if (t.needs(a)) t.accumulate(a, kgt::matmul_nt(g, t.value(b)));
                if (t.needs(b)) t.accumulate(b, kgt::matmul_tn(t.value(a), g));
              });
}

Var Tape::matmul_nt(Var a, Var b) {
  check(a);
  check(b);
  const std::size_t self = nodes_.size();
  return push(kgt::matmul_nt(value(a), value(b)), needs(a) || needs(b),
              [a, b, self](Tape& t) {
                const auto& g = t.upstream(self);
                if (t.needs(a)) t.accumulate(a, kgt::matmul(g, t.value(b)));
                if (t.needs(b)) t.accumulate(b, matmul_tn(g, t.value(a)));
              });
}

Var Tape::spmm(const SparseAdjacency& s, Var m) {
  check(m);
  const std::size_t self = nodes_.size();
  const SparseAdjacency* sp = &s;
  return push(kgt::spmm(s, value(m)), needs(m), [sp, m, self](Tape& t) {
    t.accumulate(m, spmm_transposed(*sp, t.upstream(self)));
  });
}

Var Tape::relu(Var a) {
  check(a);
  const std::size_t self = nodes_.size();
  return push(kgt::relu(value(a)), needs(a), [a, self](Tape& t) {
    DenseMatrix g = t.upstream(self);
    auto x = t.value(a).values();
    auto gv = g.values();
    for (std::size_t i = 0; i < gv.size(); ++i) {
      if (!(x[i] > 0.0)) gv[i] = 0.0;
    }
    t.accumulate(a, g);
  });
}

Var Tape::sigmoid(Var a) {
  check(a);
  const std::size_t self = nodes_.size();
  return push(kgt::sigmoid(value(a)), needs(a), [self, a](Tape& t) {
    DenseMatrix g = t.upstream(self);
    auto y = t.value(Var{self, t.id_}).values();
    auto gv = g.values();
    for (std::size_t i = 0; i < gv.size(); ++i) {
      gv[i] *= y[i] * (1.0 - y[i]);
    }
    t.accumulate(a, g);
  });
}

Var Tape::softplus(Var a) {
  check(a);
  const std::size_t self = nodes_.size();
  DenseMatrix out(value(a).rows(), value(a).cols());
  auto x = value(a).values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = kgt::softplus(x[i]);
  }
  return push(std::move(out), needs(a), [a, self](Tape& t) {
    DenseMatrix g = t.upstream(self);
    auto xv = t.value(a).values();
    auto gv = g.values();
    for (std::size_t i = 0; i < gv.size(); ++i) {
      gv[i] *= kgt::sigmoid(xv[i]);
    }
    t.accumulate(a, g);
  });
}

Var Tape::neg(Var a) { return scale(a, -1.0); }

Var Tape::scale(Var a, double k) {
  check(a);
  const std::size_t self = nodes_.size();
  return push(DenseMatrix(EigenMatrix(value(a).eigen() * k)), needs(a),
              [a, k, self](Tape& t) {
                t.accumulate(a, DenseMatrix(EigenMatrix(t.upstream(self).eigen() * k)));
              });
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  require_same_shape(value(a), value(b), "add");
  const std::size_t self = nodes_.size();
  return push(DenseMatrix(EigenMatrix(value(a).eigen() + value(b).eigen())),
              needs(a) || needs(b), [a, b, self](Tape& t) {
                t.accumulate(a, t.upstream(self));
                t.accumulate(b, t.upstream(self));
              });
}

Var Tape::add_row(Var m, Var bias) {
  check(m);
  check(bias);
  const auto& mv = value(m);
  const auto& bv = value(bias);
  if (bv.rows() != 1 || bv.cols() != mv.cols()) {
    throw ShapeError("add_row: bias must be 1 x " + std::to_string(mv.cols()));
  }
  EigenMatrix out = mv.eigen();
  out.rowwise() += bv.eigen().row(0);
  const std::size_t self = nodes_.size();
  return push(DenseMatrix(std::move(out)), needs(m) || needs(bias),
              [m, bias, self](Tape& t) {
                const auto& g = t.upstream(self);
                t.accumulate(m, g);
                if (t.needs(bias)) {
                  t.accumulate(bias, DenseMatrix(EigenMatrix(g.eigen().colwise().sum())));
                }
              });
}

Var Tape::sum(Var a) {
  check(a);
  const std::size_t self = nodes_.size();
  return push(DenseMatrix(1, 1, value(a).sum()), needs(a), [a, self](Tape& t) {
    const auto& v = t.value(a);
    t.accumulate(a, DenseMatrix(v.rows(), v.cols(), t.upstream(self)(0, 0)));
  });
}

Var Tape::mean(Var a) {
  check(a);
  const double count = static_cast<double>(value(a).size());
  if (count == 0.0) {
    throw ShapeError("mean of an empty matrix");
  }
  return scale(sum(a), 1.0 / count);
}

Var Tape::gather_rows(Var a, std::vector<NodeId> rows) {
  check(a);
  const auto& src = value(a);
  DenseMatrix out(rows.size(), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= src.rows()) {
      throw ShapeError("gather_rows: row index out of range");
    }
    out.eigen().row(i) = src.eigen().row(rows[i]);
  }
  const std::size_t self = nodes_.size();
  return push(std::move(out), needs(a), [a, self, rows = std::move(rows)](Tape& t) {
    const auto& g = t.upstream(self);
    const auto& v = t.value(a);
    DenseMatrix scatter(v.rows(), v.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      scatter.eigen().row(rows[i]) += g.eigen().row(i);
    }
    t.accumulate(a, scatter);
  });
}

Var Tape::bce_with_logits(Var logits, const SparseAdjacency& targets, double pos_weight,
                          double norm) {
  check(logits);
  const auto& x = value(logits);
  if (x.rows() != targets.dim() || x.cols() != targets.dim()) {
    throw ShapeError("bce_with_logits: logits must be n x n with n = target dimension");
  }
  const bool want_grad = needs(logits);
  DenseMatrix dx;
  if (want_grad) {
    dx = DenseMatrix(x.rows(), x.cols());
  }
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    auto trow = targets.row(r);
    std::size_t k = 0;
    double row_total = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      double t = 0.0;
      if (k < trow.size() && trow[k].col == c) {
        t = trow[k++].value;
      }
      const auto terms = logistic_terms(row[c]);
      row_total += pos_weight * t * terms.softplus_neg + (1.0 - t) * terms.softplus_pos;
      if (want_grad) {
        dx(r, c) = norm * (pos_weight * t * (terms.sig - 1.0) + (1.0 - t) * terms.sig);
      }
    }
    total += row_total;
  }
  const std::size_t self = nodes_.size();
  return push(DenseMatrix(1, 1, norm * total), want_grad,
              [logits, self, dx = std::move(dx)](Tape& t) {
                t.accumulate(logits,
                             DenseMatrix(EigenMatrix(dx.eigen() * t.upstream(self)(0, 0))));
              });
}

Var Tape::pair_dot(Var z, std::vector<std::pair<NodeId, NodeId>> pairs) {
  check(z);
  const auto& zv = value(z);
  DenseMatrix out(pairs.size(), 1);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    if (i >= zv.rows() || j >= zv.rows()) {
      throw ShapeError("pair_dot: node index out of range");
    }
    out(k, 0) = zv.eigen().row(i).dot(zv.eigen().row(j));
  }
  const std::size_t self = nodes_.size();
  return push(std::move(out), needs(z), [z, self, pairs = std::move(pairs)](Tape& t) {
    const auto& g = t.upstream(self);
    const auto& zm = t.value(z).eigen();
    DenseMatrix dz(zm.rows(), zm.cols());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [i, j] = pairs[k];
      dz.eigen().row(i) += g(k, 0) * zm.row(j);
      dz.eigen().row(j) += g(k, 0) * zm.row(i);
    }
    t.accumulate(z, dz);
  });
}

Var Tape::weighted_bce_with_logits(Var logits, std::vector<double> targets,
                                   std::vector<double> weights) {
  check(logits);
  const auto& x = value(logits);
  if (x.cols() != 1 || targets.size() != x.rows() || weights.size() != x.rows()) {
    throw ShapeError("weighted_bce_with_logits: expected matching column vectors");
  }
  DenseMatrix dx(x.rows(), 1);
  double total = 0.0;
  for (std::size_t k = 0; k < x.rows(); ++k) {
    const auto terms = logistic_terms(x(k, 0));
    const double t = targets[k];
    total += weights[k] * (t * terms.softplus_neg + (1.0 - t) * terms.softplus_pos);
    dx(k, 0) = weights[k] * (t * (terms.sig - 1.0) + (1.0 - t) * terms.sig);
  }
  const std::size_t self = nodes_.size();
  return push(DenseMatrix(1, 1, total), needs(logits),
              [logits, self, dx = std::move(dx)](Tape& t) {
                t.accumulate(logits,
                             DenseMatrix(EigenMatrix(dx.eigen() * t.upstream(self)(0, 0))));
              });
}

void Tape::backward(Var loss) {
  const std::size_t root = check(loss);
  if (nodes_[root].value.rows() != 1 || nodes_[root].value.cols() != 1) {
    throw ShapeError("backward: loss must be a 1 x 1 node");
  }
  for (auto& node : nodes_) {
    node.grad = DenseMatrix();
  }
  if (!nodes_[root].needs_grad) {
    return;
  }
  nodes_[root].grad = DenseMatrix(1, 1, 1.0);
  for (std::size_t i = root + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (node.back && !node.grad.empty()) {
      node.back(*this);
    }
  }
}

}  // namespace kgt
