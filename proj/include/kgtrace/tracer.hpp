#pragma once

#include "kgtrace/graph.hpp"
#include "kgtrace/model.hpp"

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kgt {

// One occurrence of a graph node in the tree. The same graph node may
// appear at several positions under different parents.
struct TreePosition {
  NodeId node = 0;
  std::optional<std::size_t> parent;
  std::size_t depth = 0;
  double weight = 0.0;  // correlation to the parent; 0 for the root
  std::vector<std::size_t> children;
};

class AssociationTree {
 public:
  AssociationTree(NodeId root, std::size_t degree);

  NodeId root() const { return positions_.front().node; }
  std::size_t levels() const;  // depth of the deepest position
  std::size_t degree() const { return degree_; }
  std::size_t size() const { return positions_.size(); }
  const TreePosition& at(std::size_t position) const;
  std::span<const TreePosition> positions() const { return positions_; }
  bool is_leaf(std::size_t position) const { return at(position).children.empty(); }
  // Graph nodes on the path from the root down to `position`, inclusive.
  std::vector<NodeId> lineage(std::size_t position) const;
  // Positions grouped by depth.
  std::vector<std::vector<std::size_t>> level_sets() const;

  std::size_t add_child(std::size_t parent, NodeId node, double weight);

 private:
  std::vector<TreePosition> positions_;
  std::size_t degree_;
};

// The m nodes most correlated with `v`, skipping v and `excluded`. Ordered by
// weight descending, lower index first on ties. The diagonal is never read.
std::vector<std::pair<NodeId, double>> top_correlates(const CorrelationMatrix& a_hat, NodeId v,
                                                      std::span<const NodeId> excluded,
                                                      std::size_t m);

// Grows the tree level by level from `root`. Each child excludes its
// ancestors, so no root-to-leaf path repeats a node.
AssociationTree build_association_tree(const CorrelationMatrix& a_hat, NodeId root,
                                       std::size_t levels, std::size_t degree);

struct TracePath {
  std::vector<std::size_t> positions;  // excludes the root
  std::vector<NodeId> nodes;
  std::vector<double> weights;
};

// Greedy descent from the root, taking the heaviest child at every step.
TracePath trace_path(const AssociationTree& tree);

// Returns a copy of `tree` with m children attached to the leaf at `position`.
AssociationTree expand_node(const AssociationTree& tree, const CorrelationMatrix& a_hat,
                            std::size_t position, std::size_t degree);

struct NodeLabel {
  std::string name;
  std::string label;
};

nlohmann::json tree_to_json(const AssociationTree& tree, const TracePath& trace,
                            std::span<const NodeLabel> names);

std::string render_tree_text(const AssociationTree& tree, const TracePath& trace,
                             std::span<const NodeLabel> names);

}  // namespace kgt
