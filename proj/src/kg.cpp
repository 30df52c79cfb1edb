#include "kgtrace/kg.hpp"
#include "kgtrace/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace kgt {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<EntityCategory, std::string_view>, 4> kEntityNames{{
    {EntityCategory::DataFieldType, "data_field_type"},
    {EntityCategory::ProcedureType, "procedure_type"},
    {EntityCategory::StatisticalIndicator, "statistical_indicator"},
    {EntityCategory::AlgorithmIndicator, "algorithm_indicator"},
}};

constexpr std::array<std::pair<RelationCategory, std::string_view>, 3> kRelationNames{{
    {RelationCategory::ProcedureRelation, "procedure_relation"},
    {RelationCategory::ConditionRelation, "condition_relation"},
    {RelationCategory::AlgorithmRelation, "algorithm_relation"},
}};

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw DataError(where + ": missing string field `" + key + "`");
  }
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(EntityCategory c) {
  for (const auto& [k, name] : kEntityNames) {
    if (k == c) return name;
  }
  return "?";
}

std::string_view to_string(RelationCategory c) {
  for (const auto& [k, name] : kRelationNames) {
    if (k == c) return name;
  }
  return "?";
}

std::optional<EntityCategory> parse_entity_category(std::string_view s) {
  for (const auto& [k, name] : kEntityNames) {
    if (name == s) return k;
  }
  return std::nullopt;
}

std::optional<RelationCategory> parse_relation_category(std::string_view s) {
  for (const auto& [k, name] : kRelationNames) {
    if (name == s) return k;
  }
  return std::nullopt;
}

bool relation_allows(RelationCategory rel, EntityCategory a, EntityCategory b) {
  auto pair_is = [&](EntityCategory x, EntityCategory y) {
    return (a == x && b == y) || (a == y && b == x);
  };
  switch (rel) {
    case RelationCategory::ProcedureRelation:
      return pair_is(EntityCategory::ProcedureType, EntityCategory::DataFieldType);
    case RelationCategory::ConditionRelation:
      return pair_is(EntityCategory::StatisticalIndicator, EntityCategory::DataFieldType);
    case RelationCategory::AlgorithmRelation:
      return pair_is(EntityCategory::StatisticalIndicator,
                     EntityCategory::AlgorithmIndicator);
  }
  return false;
}

std::array<std::size_t, kEntityCategoryCount> KgSchema::category_counts() const {
  std::array<std::size_t, kEntityCategoryCount> counts{};
  for (const auto& e : entities) {
    ++counts[static_cast<std::size_t>(e.category)];
  }
  return counts;
}

KgSchema parse_schema(std::string_view json_text, std::string_view source) {
  const std::string src(source);
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(src + ":" + std::to_string(line_of_offset(json_text, e.byte)) +
                    ": JSON parse error: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("entities") || !doc["entities"].is_array() ||
      !doc.contains("relations") || !doc["relations"].is_array()) {
    throw DataError(src + ": expected an object with `entities` and `relations` arrays");
  }

  KgSchema schema;
  std::unordered_map<std::string, EntityCategory> by_name;
  for (std::size_t i = 0; i < doc["entities"].size(); ++i) {
    const auto& e = doc["entities"][i];
    const std::string where = src + ": entities[" + std::to_string(i) + "]";
    const std::string name = get_string(e, "name", where);
    const std::string cat = get_string(e, "category", where);
    auto category = parse_entity_category(cat);
    if (!category) {
      throw DataError(where + ": unknown entity category `" + cat + "`");
    }
    if (!by_name.emplace(name, *category).second) {
      throw DataError(where + ": duplicate entity name `" + name + "`");
    }
    schema.entities.push_back({name, *category});
  }

  for (std::size_t i = 0; i < doc["relations"].size(); ++i) {
    const auto& r = doc["relations"][i];
    const std::string where = src + ": relations[" + std::to_string(i) + "]";
    Relation rel{get_string(r, "head", where), get_string(r, "tail", where),
                 RelationCategory::ProcedureRelation};
    const std::string cat = get_string(r, "category", where);
    auto category = parse_relation_category(cat);
    if (!category) {
      throw DataError(where + ": unknown relation category `" + cat + "`");
    }
    rel.category = *category;
    auto head = by_name.find(rel.head);
    auto tail = by_name.find(rel.tail);
    if (head == by_name.end() || tail == by_name.end()) {
      throw DataError(where + ": relation endpoint `" +
                      (head == by_name.end() ? rel.head : rel.tail) +
                      "` is not a declared entity");
    }
    if (!relation_allows(rel.category, head->second, tail->second)) {
      throw DataError(where + ": " + std::string(to_string(rel.category)) +
                      " cannot connect " + std::string(to_string(head->second)) + " `" +
                      rel.head + "` and " + std::string(to_string(tail->second)) + " `" +
                      rel.tail + "`");
    }
    schema.relations.push_back(std::move(rel));
  }
  return schema;
}

KgSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open schema file " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str(), path.string());
}

std::string schema_to_json(const KgSchema& schema) {
  json doc;
  doc["entities"] = json::array();
  for (const auto& e : schema.entities) {
    doc["entities"].push_back({{"name", e.name}, {"category", to_string(e.category)}});
  }
  doc["relations"] = json::array();
  for (const auto& r : schema.relations) {
    doc["relations"].push_back(
        {{"head", r.head}, {"tail", r.tail}, {"category", to_string(r.category)}});
  }
  return doc.dump(1);
}

std::filesystem::path bundled_schema_path() {
  return std::filesystem::path(KGTRACE_DATA_DIR) / "wireless_kg.json";
}

std::vector<int> KnowledgeGraph::label_ids() const {
  std::vector<int> out;
  out.reserve(labels.size());
  for (auto c : labels) {
    out.push_back(static_cast<int>(c));
  }
  return out;
}

KnowledgeGraph build_kg(KgSchema schema) {
  KnowledgeGraph kg;
  for (const auto& e : schema.entities) {
    if (kg.symbols.find(e.name)) {
      throw DataError("build_kg: duplicate entity name `" + e.name + "`");
    }
    kg.symbols.intern(e.name);
    kg.labels.push_back(e.category);
  }
  std::vector<Edge> edges;
  for (const auto& r : schema.relations) {
    auto head = kg.symbols.find(r.head);
    auto tail = kg.symbols.find(r.tail);
    if (!head || !tail) {
      throw DataError("build_kg: relation endpoint `" + (head ? r.tail : r.head) +
                      "` is not a declared entity");
    }
    if (*head == *tail) {
      throw DataError("build_kg: relation from `" + r.head + "` to itself");
    }
    edges.push_back({*head, *tail});
  }
  kg.graph = Graph(schema.entities.size(), edges);
  kg.schema = std::move(schema);
  return kg;
}

std::size_t ValidationReport::count(Finding::Kind kind) const {
  return static_cast<std::size_t>(std::count_if(
      findings.begin(), findings.end(), [kind](const Finding& f) { return f.kind == kind; }));
}

std::string ValidationReport::to_json() const {
  json doc;
  doc["clean"] = clean();
  doc["typing"] = count(Finding::Kind::Typing);
  doc["isolated"] = count(Finding::Kind::Isolated);
  doc["duplicate"] = count(Finding::Kind::Duplicate);
  doc["findings"] = json::array();
  for (const auto& f : findings) {
    const char* kind = f.kind == Finding::Kind::Typing     ? "typing"
                       : f.kind == Finding::Kind::Isolated ? "isolated"
                                                           : "duplicate";
    doc["findings"].push_back({{"kind", kind}, {"message", f.message}});
  }
  return doc.dump();
}

ValidationReport validate_kg(const KnowledgeGraph& kg) {
  ValidationReport report;
  std::set<Edge> seen;
  for (const auto& r : kg.schema.relations) {
    const NodeId h = *kg.symbols.find(r.head);
    const NodeId t = *kg.symbols.find(r.tail);
    if (!relation_allows(r.category, kg.labels[h], kg.labels[t])) {
      report.findings.push_back(
          {Finding::Kind::Typing, std::string(to_string(r.category)) + " between " +
                                      std::string(to_string(kg.labels[h])) + " `" + r.head +
                                      "` and " + std::string(to_string(kg.labels[t])) +
                                      " `" + r.tail + "`"});
    }
    if (!seen.insert(canonical(h, t)).second) {
      report.findings.push_back(
          {Finding::Kind::Duplicate, "duplicate relation `" + r.head + "` - `" + r.tail + "`"});
    }
  }
  for (NodeId v = 0; v < kg.graph.node_count(); ++v) {
    if (kg.graph.degree(v) == 0) {
      report.findings.push_back(
          {Finding::Kind::Isolated, "entity `" + kg.symbols.name(v) + "` has no relations"});
    }
  }
  return report;
}

DenseMatrix kg_features(const KnowledgeGraph& kg) {
  return DenseMatrix::identity(kg.graph.node_count());
}

}  // namespace kgt
