#include "kgtrace/service.hpp"
#include "kgtrace/error.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>

namespace kgt {

using nlohmann::json;

SessionStore::SessionStore(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

void SessionStore::touch(std::list<Entry>::iterator it) {
  order_.splice(order_.begin(), order_, it);
}

std::string SessionStore::insert(AssociationTree tree) {
  std::lock_guard lock(mutex_);
  std::string id = "t" + std::to_string(next_id_++);
  order_.emplace_front(id, std::move(tree));
  index_[id] = order_.begin();
  while (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
  return id;
}

std::optional<AssociationTree> SessionStore::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  touch(it->second);
  return it->second->second;
}

bool SessionStore::update(const std::string& id,
                          const std::function<AssociationTree(const AssociationTree&)>& fn,
                          AssociationTree* result) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end()) return false;
  AssociationTree next = fn(it->second->second);
  it->second->second = std::move(next);
  touch(it->second);
  if (result) *result = it->second->second;
  return true;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

namespace {

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

ServiceResponse error(int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  return {status, std::move(extra)};
}

std::optional<std::size_t> parse_count(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

constexpr std::size_t kMaxLevels = 16;
constexpr std::size_t kMaxDegree = 64;

}  // namespace

std::vector<std::string> nearest_names(std::span<const NodeLabel> nodes, const std::string& query,
                                       std::size_t limit) {
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (const auto& n : nodes) ranked.emplace_back(edit_distance(query, n.name), n.name);
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(limit, ranked.size()); ++i) out.push_back(ranked[i].second);
  return out;
}

TreeService::TreeService(ServiceModel model, std::size_t session_capacity)
    : model_(std::move(model)), sessions_(session_capacity) {
  if (model_.nodes.size() != model_.correlation.dim()) {
    throw ShapeError("service: " + std::to_string(model_.nodes.size()) + " names for " +
                     std::to_string(model_.correlation.dim()) + " correlation rows");
  }
  for (NodeId v = 0; v < model_.nodes.size(); ++v) by_name_.emplace(model_.nodes[v].name, v);
}

std::optional<NodeId> TreeService::lookup(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

json TreeService::render(const std::string& id, const AssociationTree& tree) const {
  json out = tree_to_json(tree, trace_path(tree), model_.nodes);
  out["tree_id"] = id;
  return out;
}

ServiceResponse TreeService::health() const { return {200, {{"status", "ok"}}}; }

ServiceResponse TreeService::tree(const std::optional<std::string>& node,
                                  const std::optional<std::string>& levels,
                                  const std::optional<std::string>& degree) {
  if (!node || node->empty()) {
    return error(400, "missing `node` parameter");
  }
  const auto l = levels ? parse_count(*levels) : std::optional<std::size_t>(2);
  const auto m = degree ? parse_count(*degree) : std::optional<std::size_t>(3);
  if (!l || *l == 0 || *l > kMaxLevels) {
    return error(400, "`levels` must be an integer in [1, " + std::to_string(kMaxLevels) + "]");
  }
  if (!m || *m == 0 || *m > kMaxDegree) {
    return error(400, "`degree` must be an integer in [1, " + std::to_string(kMaxDegree) + "]");
  }
  const auto root = lookup(*node);
  if (!root) {
    return error(404, "unknown node `" + *node + "`",
                 {{"suggestions", nearest_names(model_.nodes, *node)}});
  }
  auto built = build_association_tree(model_.correlation, *root, *l, *m);
  json body = render("", built);
  body["tree_id"] = sessions_.insert(std::move(built));
  return {200, std::move(body)};
}

ServiceResponse TreeService::expand(const std::string& body) {
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception&) {
    return error(400, "request body is not valid JSON");
  }
  if (!req.is_object() || !req.contains("tree_id") || !req["tree_id"].is_string() ||
      !req.contains("position") || !req["position"].is_number_unsigned()) {
    return error(400, "body needs string `tree_id` and non-negative integer `position`");
  }
  std::size_t m = 3;
  if (req.contains("degree")) {
    if (!req["degree"].is_number_unsigned()) return error(400, "`degree` must be an integer");
    m = req["degree"];
  }
  if (m == 0 || m > kMaxDegree) {
    return error(400, "`degree` must be in [1, " + std::to_string(kMaxDegree) + "]");
  }
  const std::string id = req["tree_id"];
  const std::size_t position = req["position"];

  AssociationTree updated(0, 1);
  try {
    const bool found = sessions_.update(
        id,
        [&](const AssociationTree& t) {
          if (position >= t.size()) {
            throw ShapeError("tree position " + std::to_string(position) + " does not exist");
          }
          return expand_node(t, model_.correlation, position, m);
        },
        &updated);
    if (!found) {
      return error(404, "unknown tree_id `" + id + "`");
    }
  } catch (const ShapeError& e) {
    return error(400, e.what());
  } catch (const DataError& e) {
    return error(409, e.what());
  }
  return {200, render(id, updated)};
}

ServiceResponse TreeService::search(const std::string& query, std::size_t limit) const {
  json results = json::array();
  if (!query.empty()) {
    std::vector<std::pair<int, NodeId>> hits;
    for (NodeId v = 0; v < model_.nodes.size(); ++v) {
      const auto& name = model_.nodes[v].name;
      const auto at = name.find(query);
      if (at == std::string::npos) continue;
      hits.emplace_back(at == 0 ? 0 : 1, v);
    }
    std::sort(hits.begin(), hits.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return model_.nodes[a.second].name < model_.nodes[b.second].name;
    });
    for (std::size_t i = 0; i < std::min(limit, hits.size()); ++i) {
      const NodeId v = hits[i].second;
      results.push_back(
          {{"id", v}, {"name", model_.nodes[v].name}, {"label", model_.nodes[v].label}});
    }
  }
  return {200, {{"query", query}, {"results", std::move(results)}}};
}

void TreeService::mount(httplib::Server& server, const std::string& cors_origin) {
  server.set_default_headers({{"Access-Control-Allow-Origin", cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});

  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto param = [](const httplib::Request& req, const char* key) -> std::optional<std::string> {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
  };

  server.Get("/api/health", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, health());
  });
  server.Get("/api/tree", [this, reply, param](const httplib::Request& req, httplib::Response& res) {
    reply(res, tree(param(req, "node"), param(req, "levels"), param(req, "degree")));
  });
  server.Post("/api/tree/expand", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, expand(req.body));
  });
  server.Get("/api/nodes", [this, reply, param](const httplib::Request& req, httplib::Response& res) {
    std::size_t limit = 20;
    if (auto l = param(req, "limit")) {
      const auto parsed = parse_count(*l);
      if (!parsed || *parsed == 0) {
        reply(res, error(400, "`limit` must be a positive integer"));
        return;
      }
      limit = *parsed;
    }
    reply(res, search(param(req, "q").value_or(""), limit));
  });
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server.set_exception_handler(
      [reply](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        reply(res, error(500, what));
      });
}

}  // namespace kgt
