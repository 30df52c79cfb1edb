#pragma once

#include "kgtrace/model.hpp"
#include "kgtrace/tracer.hpp"

#include <json.hpp>

#include <cstddef>
#include <functional>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace httplib {
class Server;
}

namespace kgt {

// Thread-safe LRU map from tree_id to the latest version of that tree.
class SessionStore {
 public:
  explicit SessionStore(std::size_t capacity = 256);

  std::string insert(AssociationTree tree);
  std::optional<AssociationTree> find(const std::string& id);
  // Applies `fn` to the stored tree under the lock and stores its result.
  // Returns false if the id is unknown; exceptions from `fn` leave the
  // stored tree untouched.
  bool update(const std::string& id,
              const std::function<AssociationTree(const AssociationTree&)>& fn,
              AssociationTree* result = nullptr);
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

 private:
  using Entry = std::pair<std::string, AssociationTree>;
  void touch(std::list<Entry>::iterator it);

  mutable std::mutex mutex_;
  std::size_t capacity_;
  std::size_t next_id_ = 1;
  std::list<Entry> order_;  // most recent first
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

// Read-only query context: names, labels and the correlation matrix.
struct ServiceModel {
  std::vector<NodeLabel> nodes;
  CorrelationMatrix correlation;
};

// Names ordered by edit distance to `query`, closest first.
std::vector<std::string> nearest_names(std::span<const NodeLabel> nodes, const std::string& query,
                                       std::size_t limit = 5);

class TreeService {
 public:
  explicit TreeService(ServiceModel model, std::size_t session_capacity = 256);

  ServiceResponse health() const;
  ServiceResponse tree(const std::optional<std::string>& node,
                       const std::optional<std::string>& levels,
                       const std::optional<std::string>& degree);
  ServiceResponse expand(const std::string& body);
  // Prefix matches first, then substring matches; each group by name.
  ServiceResponse search(const std::string& query, std::size_t limit = 20) const;

  // Registers the /api routes and CORS handling on `server`.
  void mount(httplib::Server& server, const std::string& cors_origin = "*");

  SessionStore& sessions() { return sessions_; }

 private:
  nlohmann::json render(const std::string& id, const AssociationTree& tree) const;
  std::optional<NodeId> lookup(const std::string& name) const;

  ServiceModel model_;
  std::unordered_map<std::string, NodeId> by_name_;
  SessionStore sessions_;
};

}  // namespace kgt
