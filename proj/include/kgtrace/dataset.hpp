#pragma once

#include "kgtrace/graph.hpp"
#include "kgtrace/kg.hpp"
#include "kgtrace/matrix.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace kgt {

// A graph ready for training, with whatever ground truth it carries.
struct DatasetBundle {
  std::string name;
  Graph graph;
  DenseMatrix features;
  SymbolTable symbols;
  std::vector<int> labels;               // per node, empty if unlabelled
  std::vector<std::string> class_names;  // indexed by label id
  std::size_t dropped_citations = 0;
  nlohmann::json descriptor;             // reloads the same bundle

  std::size_t class_count() const { return class_names.size(); }
  std::string label_name(NodeId v) const;
};

// LINQS citation format. Content lines are `id<TAB>f_1 ... f_m<TAB>class`
// with binary features; cites lines are `cited<TAB>citing`. Edges are
// symmetrised, self-citations and citations to unknown ids are dropped and
// counted in `dropped_citations`.
DatasetBundle load_citation_dataset(const std::filesystem::path& content,
                                    const std::filesystem::path& cites, std::string name);

// Featureless knowledge graph with X = I and entity categories as labels.
DatasetBundle kg_dataset(const KnowledgeGraph& kg, std::string name,
                         const std::filesystem::path& schema_path);

// {"kind": "kg", "schema": path} or
// {"kind": "linqs", "content": path, "cites": path, "name": str}
DatasetBundle load_dataset(const nlohmann::json& descriptor);

}  // namespace kgt
