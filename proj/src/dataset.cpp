#include "kgtrace/dataset.hpp"
#include "kgtrace/error.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>

namespace kgt {

std::string DatasetBundle::label_name(NodeId v) const {
  if (v >= labels.size()) return "";
  const int l = labels[v];
  return l >= 0 && static_cast<std::size_t>(l) < class_names.size() ? class_names[l]
                                                                     : std::to_string(l);
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

std::string where(const std::filesystem::path& p, std::size_t line) {
  return p.string() + ":" + std::to_string(line);
}

}  // namespace

DatasetBundle load_citation_dataset(const std::filesystem::path& content,
                                    const std::filesystem::path& cites, std::string name) {
  std::ifstream in(content);
  if (!in) {
    throw DataError("cannot open content file " + content.string());
  }
  DatasetBundle out;
  out.name = std::move(name);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> classes;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 3) {
      throw DataError(where(content, line_no) + ": expected id, features and class");
    }
    if (width == 0) {
      width = fields.size() - 2;
    } else if (fields.size() - 2 != width) {
      throw DataError(where(content, line_no) + ": expected " + std::to_string(width) +
                      " features, found " + std::to_string(fields.size() - 2));
    }
    if (out.symbols.find(fields.front())) {
      throw DataError(where(content, line_no) + ": duplicate paper id `" + fields.front() + "`");
    }
    std::vector<double> feats(width);
    for (std::size_t f = 0; f < width; ++f) {
      const auto& tok = fields[f + 1];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || (v != 0.0 && v != 1.0)) {
        throw DataError(where(content, line_no) + ": bad feature value `" + tok +
                        "` (expected 0 or 1)");
      }
      feats[f] = v;
    }
    out.symbols.intern(fields.front());
    rows.push_back(std::move(feats));
    classes.push_back(fields.back());
  }
  if (rows.empty()) {
    throw DataError("content file " + content.string() + " has no nodes");
  }

  std::map<std::string, int> class_ids;
  for (const auto& c : classes) class_ids.emplace(c, 0);
  for (auto& [cls, id] : class_ids) {
    id = static_cast<int>(out.class_names.size());
    out.class_names.push_back(cls);
  }
  for (const auto& c : classes) out.labels.push_back(class_ids[c]);

  std::ifstream cin(cites);
  if (!cin) {
    throw DataError("cannot open cites file " + cites.string());
  }
  std::set<Edge> edges;
  line_no = 0;
  while (std::getline(cin, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw DataError(where(cites, line_no) + ": expected `cited<TAB>citing`");
    }
    const auto a = out.symbols.find(fields[0]);
    const auto b = out.symbols.find(fields[1]);
    if (!a || !b || *a == *b) {
      ++out.dropped_citations;
      continue;
    }
    edges.insert(canonical(*a, *b));
  }

  const std::size_t n = rows.size();
  out.features = DenseMatrix(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(rows[i].begin(), rows[i].end(), out.features.row(i).begin());
  }
  const std::vector<Edge> edge_list(edges.begin(), edges.end());
  out.graph = Graph(n, edge_list);
  out.descriptor = {{"kind", "linqs"},
                    {"name", out.name},
                    {"content", std::filesystem::absolute(content).string()},
                    {"cites", std::filesystem::absolute(cites).string()}};
  return out;
}

DatasetBundle kg_dataset(const KnowledgeGraph& kg, std::string name,
                         const std::filesystem::path& schema_path) {
  DatasetBundle out;
  out.name = std::move(name);
  out.graph = kg.graph;
  out.features = kg_features(kg);
  out.symbols = kg.symbols;
  out.labels = kg.label_ids();
  for (std::size_t c = 0; c < kEntityCategoryCount; ++c) {
    out.class_names.emplace_back(to_string(static_cast<EntityCategory>(c)));
  }
  out.descriptor = {{"kind", "kg"},
                    {"name", out.name},
                    {"schema", std::filesystem::absolute(schema_path).string()}};
  return out;
}

DatasetBundle load_dataset(const nlohmann::json& descriptor) {
  if (!descriptor.is_object() || !descriptor.contains("kind")) {
    throw DataError("dataset descriptor needs a `kind`");
  }
  const std::string kind = descriptor.at("kind");
  if (kind == "kg") {
    const std::filesystem::path schema =
        descriptor.contains("schema") ? std::filesystem::path(descriptor.at("schema").get<std::string>())
                                      : bundled_schema_path();
    const std::string name = descriptor.value("name", std::string("wireless-kg"));
    return kg_dataset(build_kg(load_schema(schema)), name, schema);
  }
  if (kind == "linqs") {
    for (const char* key : {"content", "cites"}) {
      if (!descriptor.contains(key)) {
        throw DataError(std::string("linqs dataset descriptor needs `") + key + "`");
      }
    }
    return load_citation_dataset(descriptor.at("content").get<std::string>(),
                                 descriptor.at("cites").get<std::string>(),
                                 descriptor.value("name", std::string("citation")));
  }
  throw DataError("unknown dataset kind `" + kind + "`");
}

}  // namespace kgt
