#include "kgtrace/cli.hpp"
#include "kgtrace/dataset.hpp"
#include "kgtrace/error.hpp"
#include "kgtrace/eval.hpp"
#include "kgtrace/persist.hpp"
#include "kgtrace/service.hpp"
#include "kgtrace/tracer.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace kgt {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) {
    throw DataError("run config must be a JSON object");
  }
  static const std::set<std::string> top{"seed", "out", "dataset", "encoder", "task"};
  static const std::set<std::string> task_keys{"k",    "restarts", "test_ratios",
                                               "node", "levels",   "degree"};
  for (const auto& [key, _] : j.items()) {
    if (!top.count(key)) throw DataError("unknown run config key `" + key + "`");
  }
  RunConfig cfg;
  try {
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    if (j.contains("dataset")) cfg.dataset = j["dataset"];
    if (j.contains("encoder")) cfg.encoder = config_from_json(j["encoder"]);
    if (j.contains("task")) {
      const auto& t = j["task"];
      for (const auto& [key, _] : t.items()) {
        if (!task_keys.count(key)) throw DataError("unknown task key `" + key + "`");
      }
      if (t.contains("k")) cfg.k = t["k"].get<std::size_t>();
      if (t.contains("restarts")) cfg.restarts = t["restarts"];
      if (t.contains("test_ratios")) cfg.test_ratios = t["test_ratios"].get<std::vector<double>>();
      if (t.contains("node")) cfg.node = t["node"];
      if (t.contains("levels")) cfg.levels = t["levels"];
      if (t.contains("degree")) cfg.degree = t["degree"];
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad run config: ") + e.what());
  }
  return cfg;
}

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open config file " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
}

std::string jsonl(const std::vector<ordered_json>& rows) {
  std::string text;
  for (const auto& r : rows) text += r.dump() + "\n";
  return text;
}

struct LoadedModel {
  ModelFile file;
  DatasetBundle data;
  std::vector<NodeLabel> names;
};

LoadedModel open_model(const fs::path& path) {
  LoadedModel m;
  m.file = load_model(path);
  m.data = load_dataset(m.file.dataset);
  if (m.data.graph.node_count() != m.file.embedding.z.rows()) {
    throw DataError(path.string() + ": model has " + std::to_string(m.file.embedding.z.rows()) +
                    " nodes but its dataset now has " +
                    std::to_string(m.data.graph.node_count()));
  }
  SymbolTable symbols = m.data.symbols;
  if (!m.file.symbols.empty()) {
    const fs::path sym = path.parent_path() / m.file.symbols;
    if (fs::exists(sym)) symbols = SymbolTable::read(sym);
  }
  for (NodeId v = 0; v < symbols.size(); ++v) {
    m.names.push_back({symbols.name(v), m.data.label_name(v)});
  }
  return m;
}

EncoderConfig encoder_for(const RunConfig& cfg) {
  EncoderConfig enc = cfg.encoder;
  enc.seed = cfg.seed;
  return enc;
}

ordered_json history_row(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"recon_loss", r.recon_loss},
          {"disc_loss", r.disc_loss},
          {"gen_loss", r.gen_loss}};
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const DatasetBundle data = load_dataset(cfg.dataset);
  const EncoderConfig enc = encoder_for(cfg);
  fs::create_directories(cfg.out);
  const TrainResult result = train(data.graph, data.features, enc);

  std::vector<ordered_json> rows;
  for (const auto& r : result.history) rows.push_back(history_row(r));
  write_text(cfg.out / "history.jsonl", jsonl(rows));
  data.symbols.write(cfg.out / "symbols.tsv");

  ModelFile model;
  model.config = enc;
  model.config.layer_dims.front() = data.features.cols();
  model.dataset = data.descriptor;
  model.symbols = "symbols.tsv";
  model.state = result.state;
  model.embedding = result.embedding;
  save_model(cfg.out / "model.kgt", model);

  out << "trained " << data.name << ": " << data.graph.node_count() << " nodes, "
      << data.graph.edge_count() << " edges, " << result.history.size() << " epochs";
  if (!result.history.empty()) out << ", final recon loss " << result.history.back().recon_loss;
  out << "\nwrote " << (cfg.out / "model.kgt").string() << "\n";
  if (data.dropped_citations > 0) {
    out << "warning: dropped " << data.dropped_citations << " dangling citations\n";
  }
  return kExitOk;
}

int cmd_classify(const RunConfig& cfg, const fs::path& model_path, std::ostream& out) {
  const LoadedModel m = open_model(model_path);
  if (m.data.labels.empty()) {
    throw DataError("dataset `" + m.data.name + "` has no labels to classify against");
  }
  const std::size_t k = cfg.k.value_or(m.data.class_count());
  const auto clusters = kmeans_best_of(m.file.embedding.z, k, cfg.seed, cfg.restarts);
  const double acc = cluster_accuracy(clusters.labels, m.data.labels);
  ordered_json row{{"dataset", m.data.name}, {"seed", cfg.seed}, {"k", k}, {"acc", acc}};
  fs::create_directories(cfg.out);
  write_text(cfg.out / "classify.jsonl", jsonl({row}));
  out << row.dump() << "\n";
  return kExitOk;
}

int cmd_linkpred(const RunConfig& cfg, std::ostream& out) {
  if (cfg.test_ratios.empty()) {
    throw ShapeError("no test ratios given");
  }
  const DatasetBundle data = load_dataset(cfg.dataset);
  const EncoderConfig enc = encoder_for(cfg);
  std::vector<ordered_json> rows;
  for (double ratio : cfg.test_ratios) {
    const EdgeSplit split = split_edges(data.graph, ratio, cfg.seed);
    const Graph train_graph(data.graph.node_count(), split.train_edges);
    const TrainResult result = train(train_graph, data.features, enc);
    const LinkMetrics metrics = ap_auc(result.embedding, split);
    ordered_json row{{"dataset", data.name},
                     {"seed", cfg.seed},
                     {"test_ratio", ratio},
                     {"ap", metrics.ap},
                     {"auc", metrics.auc}};
    out << row.dump() << "\n";
    rows.push_back(std::move(row));
  }
  fs::create_directories(cfg.out);
  write_text(cfg.out / "linkpred.jsonl", jsonl(rows));
  return kExitOk;
}

NodeId resolve_node(const std::vector<NodeLabel>& names, const std::string& query) {
  for (NodeId v = 0; v < names.size(); ++v) {
    if (names[v].name == query) return v;
  }
  std::string hint;
  for (const auto& n : nearest_names(names, query)) {
    hint += (hint.empty() ? "" : ", ") + ("`" + n + "`");
  }
  throw DataError("unknown node `" + query + "`; nearest names: " + hint);
}

int cmd_trace(const RunConfig& cfg, const fs::path& model_path, std::ostream& out) {
  if (cfg.node.empty()) {
    throw ShapeError("trace needs --node");
  }
  const LoadedModel m = open_model(model_path);
  const NodeId root = resolve_node(m.names, cfg.node);
  const CorrelationMatrix a_hat = decode(m.file.embedding);
  const AssociationTree tree = build_association_tree(a_hat, root, cfg.levels, cfg.degree);
  const TracePath path = trace_path(tree);
  fs::create_directories(cfg.out);
  write_text(cfg.out / "trace.json", tree_to_json(tree, path, m.names).dump(2) + "\n");
  out << render_tree_text(tree, path, m.names);
  out << "trace:";
  for (NodeId v : path.nodes) out << " -> " << m.names[v].name;
  out << "\n";
  return kExitOk;
}

int cmd_export(const RunConfig& cfg, const fs::path& model_path, std::ostream& out) {
  const LoadedModel m = open_model(model_path);
  fs::create_directories(cfg.out);
  const fs::path target = cfg.out / "embeddings.tsv";
  export_embeddings(m.file.embedding, m.data.labels, target);
  out << "wrote " << m.file.embedding.z.rows() << " rows to " << target.string() << "\n";
  return kExitOk;
}

int cmd_validate(const fs::path& schema_path, std::ostream& out) {
  const KnowledgeGraph kg = build_kg(load_schema(schema_path));
  const ValidationReport report = validate_kg(kg);
  const auto counts = kg.schema.category_counts();
  ordered_json summary{{"schema", schema_path.string()},
                       {"entities", kg.schema.entities.size()},
                       {"relations", kg.schema.relations.size()}};
  for (std::size_t c = 0; c < counts.size(); ++c) {
    summary[std::string(to_string(static_cast<EntityCategory>(c)))] = counts[c];
  }
  out << summary.dump() << "\n" << report.to_json() << "\n";
  return report.clean() ? kExitOk : kExitData;
}

int cmd_serve(const fs::path& model_path, const std::string& host, int port,
              const std::string& cors_origin, std::ostream& out) {
  LoadedModel m = open_model(model_path);
  TreeService service({m.names, decode(m.file.embedding)});
  httplib::Server server;
  service.mount(server, cors_origin);
  out << "serving " << m.data.name << " on http://" << host << ":" << port << "\n" << std::flush;
  if (!server.listen(host, port)) {
    throw DataError("cannot listen on " + host + ":" + std::to_string(port));
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-graph embedding and anomaly tracing", "kgtrace"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_dir;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (default 0)");
  app.add_option("--config", config_path, "JSON run config");
  auto* out_opt = app.add_option("--out", out_dir, "Output directory (default out)");

  // Dataset and encoder overrides shared by train and linkpred.
  std::string schema, content, cites, name;
  std::size_t epochs = 0;
  double lr = 0.0, gan_weight = 0.0;
  auto add_data_opts = [&](CLI::App* sub) {
    sub->add_option("--schema", schema, "Knowledge-graph schema JSON (default: bundled)");
    sub->add_option("--content", content, "LINQS .content file");
    sub->add_option("--cites", cites, "LINQS .cites file");
    sub->add_option("--name", name, "Dataset name for reports");
    sub->add_option("--epochs", epochs, "Training epochs");
    sub->add_option("--lr", lr, "Learning rate");
    sub->add_option("--gan-weight", gan_weight, "Weight of the adversarial generator loss");
  };

  auto* train_cmd = app.add_subcommand("train", "Train the encoder and write model files");
  add_data_opts(train_cmd);

  std::string model_path;
  auto add_model_opt = [&](CLI::App* sub) {
    sub->add_option("--model", model_path, "Model file (default <out>/model.kgt)");
  };

  std::size_t k = 0, restarts = 0;
  auto* classify_cmd = app.add_subcommand("classify", "K-means node classification accuracy");
  add_model_opt(classify_cmd);
  auto* k_opt = classify_cmd->add_option("--k", k, "Clusters (default: number of classes)");
  auto* restarts_opt = classify_cmd->add_option("--restarts", restarts, "K-means restarts");

  std::vector<double> ratios;
  auto* linkpred_cmd = app.add_subcommand("linkpred", "Relation prediction AP/AUC sweep");
  add_data_opts(linkpred_cmd);
  auto* ratios_opt =
      linkpred_cmd->add_option("--ratios", ratios, "Test-edge ratios")->delimiter(',');

  std::string node;
  std::size_t levels = 0, degree = 0;
  auto* trace_cmd = app.add_subcommand("trace", "Build the association tree for a node");
  add_model_opt(trace_cmd);
  auto* node_opt = trace_cmd->add_option("--node", node, "Abnormal node name");
  auto* levels_opt = trace_cmd->add_option("--levels", levels, "Tree levels (default 2)");
  auto* degree_opt = trace_cmd->add_option("--degree", degree, "Children per node (default 3)");

  std::string host = "127.0.0.1", cors = "*";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP query service for the tree explorer");
  add_model_opt(serve_cmd);
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port");
  serve_cmd->add_option("--cors-origin", cors, "Allowed CORS origin");

  auto* export_cmd = app.add_subcommand("export", "Write node embeddings as TSV");
  add_model_opt(export_cmd);

  std::string validate_schema;
  auto* validate_cmd = app.add_subcommand("validate-kg", "Check a knowledge-graph schema");
  validate_cmd->add_option("--schema", validate_schema, "Schema JSON (default: bundled)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto given = [](const CLI::App* sub, const char* flag) {
    return sub->count(flag) > 0;
  };

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = run_config_from_json(read_json_file(config_path));
    if (seed_opt->count()) cfg.seed = seed;
    if (out_opt->count()) cfg.out = out_dir;

    for (CLI::App* sub : {train_cmd, linkpred_cmd}) {
      if (!sub->parsed()) continue;
      if (given(sub, "--content") || given(sub, "--cites")) {
        if (content.empty() || cites.empty()) {
          err << "error: --content and --cites must be given together\n";
          return kExitUsage;
        }
        cfg.dataset = {{"kind", "linqs"}, {"content", content}, {"cites", cites}};
        if (!name.empty()) cfg.dataset["name"] = name;
      } else if (given(sub, "--schema")) {
        cfg.dataset = {{"kind", "kg"}, {"schema", schema}};
        if (!name.empty()) cfg.dataset["name"] = name;
      }
      if (given(sub, "--epochs")) cfg.encoder.epochs = epochs;
      if (given(sub, "--lr")) cfg.encoder.learning_rate = lr;
      if (given(sub, "--gan-weight")) cfg.encoder.gan_weight = gan_weight;
    }
    if (k_opt->count()) cfg.k = k;
    if (restarts_opt->count()) cfg.restarts = restarts;
    if (ratios_opt->count()) cfg.test_ratios = ratios;
    if (node_opt->count()) cfg.node = node;
    if (levels_opt->count()) cfg.levels = levels;
    if (degree_opt->count()) cfg.degree = degree;
    const fs::path model = model_path.empty() ? cfg.out / "model.kgt" : fs::path(model_path);

    if (train_cmd->parsed()) return cmd_train(cfg, out);
    if (classify_cmd->parsed()) return cmd_classify(cfg, model, out);
    if (linkpred_cmd->parsed()) return cmd_linkpred(cfg, out);
    if (trace_cmd->parsed()) return cmd_trace(cfg, model, out);
    if (export_cmd->parsed()) return cmd_export(cfg, model, out);
    if (validate_cmd->parsed()) {
      return cmd_validate(validate_schema.empty() ? bundled_schema_path() : fs::path(validate_schema),
                          out);
    }
    if (serve_cmd->parsed()) return cmd_serve(model, host, port, cors, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace kgt
