#pragma once

#include "kgtrace/graph.hpp"
#include "kgtrace/matrix.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgt {

enum class EntityCategory {
  DataFieldType,
  ProcedureType,
  StatisticalIndicator,
  AlgorithmIndicator,
};

enum class RelationCategory {
  ProcedureRelation,   // procedure type <-> data field type
  ConditionRelation,   // statistical indicator <-> data field type
  AlgorithmRelation,   // statistical indicator <-> algorithm indicator
};

inline constexpr std::size_t kEntityCategoryCount = 4;

std::string_view to_string(EntityCategory c);
std::string_view to_string(RelationCategory c);
std::optional<EntityCategory> parse_entity_category(std::string_view s);
std::optional<RelationCategory> parse_relation_category(std::string_view s);

// Endpoint typing rule; endpoint order does not matter.
bool relation_allows(RelationCategory rel, EntityCategory a, EntityCategory b);

struct Entity {
  std::string name;
  EntityCategory category;
};

struct Relation {
  std::string head;
  std::string tail;
  RelationCategory category;
};

struct KgSchema {
  std::vector<Entity> entities;
  std::vector<Relation> relations;

  std::array<std::size_t, kEntityCategoryCount> category_counts() const;
};

// Parses the JSON schema format. Rejects syntax errors (with line number),
// unknown categories, duplicate entity names, dangling relation endpoints
// and endpoint-typing violations.
KgSchema parse_schema(std::string_view json_text, std::string_view source = "<schema>");
KgSchema load_schema(const std::filesystem::path& path);
std::string schema_to_json(const KgSchema& schema);

std::filesystem::path bundled_schema_path();

struct KnowledgeGraph {
  KgSchema schema;
  SymbolTable symbols;  // entity name -> node id
  Graph graph;
  std::vector<EntityCategory> labels;

  std::vector<int> label_ids() const;
};

// One node per entity (schema order), one edge per distinct relation pair.
// Only requires unique names and resolvable endpoints; typing is reported by
// validate_kg.
KnowledgeGraph build_kg(KgSchema schema);

struct Finding {
  enum class Kind { Typing, Isolated, Duplicate };
  Kind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool clean() const { return findings.empty(); }
  std::size_t count(Finding::Kind kind) const;
  std::string to_json() const;
};

ValidationReport validate_kg(const KnowledgeGraph& kg);

// Featureless-graph convention: X = I_n.
DenseMatrix kg_features(const KnowledgeGraph& kg);

}  // namespace kgt
