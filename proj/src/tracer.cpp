#include "kgtrace/tracer.hpp"
#include "kgtrace/error.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace kgt {

AssociationTree::AssociationTree(NodeId root, std::size_t degree) : degree_(degree) {
  positions_.push_back(TreePosition{root, std::nullopt, 0, 0.0, {}});
}

std::size_t AssociationTree::levels() const {
  std::size_t deepest = 0;
  for (const auto& p : positions_) deepest = std::max(deepest, p.depth);
  return deepest;
}

const TreePosition& AssociationTree::at(std::size_t position) const {
  if (position >= positions_.size()) {
    throw ShapeError("tree position " + std::to_string(position) + " does not exist");
  }
  return positions_[position];
}

std::vector<NodeId> AssociationTree::lineage(std::size_t position) const {
  std::vector<NodeId> out;
  std::optional<std::size_t> cur = position;
  while (cur) {
    const auto& p = at(*cur);
    out.push_back(p.node);
    cur = p.parent;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<std::vector<std::size_t>> AssociationTree::level_sets() const {
  std::vector<std::vector<std::size_t>> out(levels() + 1);
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    out[positions_[i].depth].push_back(i);
  }
  return out;
}

std::size_t AssociationTree::add_child(std::size_t parent, NodeId node, double weight) {
  const std::size_t depth = at(parent).depth + 1;
  const std::size_t id = positions_.size();
  positions_.push_back(TreePosition{node, parent, depth, weight, {}});
  positions_[parent].children.push_back(id);
  return id;
}

std::vector<std::pair<NodeId, double>> top_correlates(const CorrelationMatrix& a_hat, NodeId v,
                                                      std::span<const NodeId> excluded,
                                                      std::size_t m) {
  const std::size_t n = a_hat.dim();
  if (v >= n) {
    throw ShapeError("node " + std::to_string(v) + " out of range for " + std::to_string(n) +
                     " nodes");
  }
  std::vector<bool> skip(n, false);
  skip[v] = true;
  for (NodeId e : excluded) {
    if (e < n) skip[e] = true;
  }
  std::vector<std::pair<NodeId, double>> cand;
  const auto row = a_hat.row(v);
  for (NodeId j = 0; j < n; ++j) {
    if (!skip[j]) cand.emplace_back(j, row[j]);
  }
  const std::size_t take = std::min(m, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<long>(take), cand.end(),
                    [](const auto& a, const auto& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                    });
  cand.resize(take);
  return cand;
}

namespace {

void grow(AssociationTree& tree, const CorrelationMatrix& a_hat, std::size_t position,
          std::size_t degree) {
  const auto ancestors = tree.lineage(position);
  for (const auto& [node, w] : top_correlates(a_hat, tree.at(position).node, ancestors, degree)) {
    tree.add_child(position, node, w);
  }
}

}  // namespace

AssociationTree build_association_tree(const CorrelationMatrix& a_hat, NodeId root,
                                       std::size_t levels, std::size_t degree) {
  if (root >= a_hat.dim()) {
    throw ShapeError("root " + std::to_string(root) + " out of range");
  }
  if (levels == 0 || degree == 0) {
    throw ShapeError("tree levels and degree must be at least 1");
  }
  AssociationTree tree(root, degree);
  std::vector<std::size_t> frontier{0};
  for (std::size_t level = 0; level < levels; ++level) {
    std::vector<std::size_t> next;
    for (std::size_t pos : frontier) {
      grow(tree, a_hat, pos, degree);
      const auto& kids = tree.at(pos).children;
      next.insert(next.end(), kids.begin(), kids.end());
    }
    frontier = std::move(next);
  }
  return tree;
}

TracePath trace_path(const AssociationTree& tree) {
  TracePath path;
  std::size_t cur = 0;
  while (!tree.is_leaf(cur)) {
    std::size_t best = tree.at(cur).children.front();
    for (std::size_t c : tree.at(cur).children) {
      const auto& cand = tree.at(c);
      const auto& top = tree.at(best);
      if (cand.weight > top.weight || (cand.weight == top.weight && cand.node < top.node)) {
        best = c;
      }
    }
    path.positions.push_back(best);
    path.nodes.push_back(tree.at(best).node);
    path.weights.push_back(tree.at(best).weight);
    cur = best;
  }
  return path;
}

AssociationTree expand_node(const AssociationTree& tree, const CorrelationMatrix& a_hat,
                            std::size_t position, std::size_t degree) {
  if (degree == 0) {
    throw ShapeError("expansion degree must be at least 1");
  }
  if (!tree.is_leaf(position)) {
    throw DataError("tree position " + std::to_string(position) + " is not a leaf");
  }
  AssociationTree out = tree;
  grow(out, a_hat, position, degree);
  return out;
}

nlohmann::json tree_to_json(const AssociationTree& tree, const TracePath& trace,
                            std::span<const NodeLabel> names) {
  using nlohmann::json;
  json nodes = json::array();
  json edges = json::array();
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& p = tree.at(i);
    json entry{{"position", i}, {"id", p.node}, {"depth", p.depth}};
    if (p.node < names.size()) {
      entry["name"] = names[p.node].name;
      entry["label"] = names[p.node].label;
    }
    nodes.push_back(std::move(entry));
    if (p.parent) {
      edges.push_back({{"parent_pos", *p.parent},
                       {"child_pos", i},
                       {"child_id", p.node},
                       {"weight", p.weight}});
    }
  }
  return json{{"root", tree.root()},
              {"l", tree.levels()},
              {"m", tree.degree()},
              {"nodes", std::move(nodes)},
              {"edges", std::move(edges)},
              {"trace", trace.positions}};
}

std::string render_tree_text(const AssociationTree& tree, const TracePath& trace,
                             std::span<const NodeLabel> names) {
  const std::set<std::size_t> on_path(trace.positions.begin(), trace.positions.end());
  auto name_of = [&](NodeId v) {
    return v < names.size() ? names[v].name : std::to_string(v);
  };
  std::string out;
  auto visit = [&](auto&& self, std::size_t pos) -> void {
    const auto& p = tree.at(pos);
    out.append(2 * p.depth, ' ');
    if (p.parent) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", p.weight);
      out += on_path.count(pos) ? "* " : "- ";
      out += name_of(p.node) + " (" + buf + ")";
    } else {
      out += name_of(p.node);
    }
    out += '\n';
    for (std::size_t c : p.children) self(self, c);
  };
  visit(visit, 0);
  return out;
}

}  // namespace kgt
