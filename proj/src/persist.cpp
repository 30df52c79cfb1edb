#include "kgtrace/persist.hpp"
#include "kgtrace/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

namespace kgt {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'K', 'G', 'T', '1'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&v, bytes, sizeof(T));
  }
  return v;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::string activation_name(Activation a) { return a == Activation::Relu ? "relu" : "linear"; }

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "linear") return Activation::Linear;
  throw DataError("unknown activation `" + s + "`");
}

}  // namespace

json config_to_json(const EncoderConfig& cfg) {
  json acts = json::array();
  for (std::size_t l = 0; l < cfg.layer_count(); ++l) {
    acts.push_back(activation_name(cfg.activation(l)));
  }
  return {
      {"layer_dims", cfg.layer_dims},
      {"activations", acts},
      {"learning_rate", cfg.learning_rate},
      {"epochs", cfg.epochs},
      {"seed", cfg.seed},
      {"disc_hidden", cfg.disc_hidden},
      {"disc_learning_rate", cfg.disc_learning_rate},
      {"gan_weight", cfg.gan_weight},
      {"beta1", cfg.beta1},
      {"beta2", cfg.beta2},
      {"eps", cfg.eps},
      {"dense_limit", cfg.dense_limit},
      {"disc_batch_rows", cfg.disc_batch_rows},
  };
}

EncoderConfig config_from_json(const json& j) {
  static const std::set<std::string> known{
      "layer_dims", "activations", "learning_rate", "epochs", "seed",
      "disc_hidden", "disc_learning_rate", "gan_weight", "beta1", "beta2",
      "eps", "dense_limit", "disc_batch_rows"};
  if (!j.is_object()) {
    throw DataError("encoder config must be a JSON object");
  }
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw DataError("unknown encoder config key `" + key + "`");
    }
  }
  EncoderConfig cfg;
  try {
    if (j.contains("layer_dims")) cfg.layer_dims = j["layer_dims"].get<std::vector<std::size_t>>();
    if (j.contains("activations")) {
      cfg.activations.clear();
      for (const auto& a : j["activations"]) cfg.activations.push_back(parse_activation(a));
    }
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"];
    if (j.contains("epochs")) cfg.epochs = j["epochs"];
    if (j.contains("seed")) cfg.seed = j["seed"];
    if (j.contains("disc_hidden")) cfg.disc_hidden = j["disc_hidden"];
    if (j.contains("disc_learning_rate")) cfg.disc_learning_rate = j["disc_learning_rate"];
    if (j.contains("gan_weight")) cfg.gan_weight = j["gan_weight"];
    if (j.contains("beta1")) cfg.beta1 = j["beta1"];
    if (j.contains("beta2")) cfg.beta2 = j["beta2"];
    if (j.contains("eps")) cfg.eps = j["eps"];
    if (j.contains("dense_limit")) cfg.dense_limit = j["dense_limit"];
    if (j.contains("disc_batch_rows")) cfg.disc_batch_rows = j["disc_batch_rows"];
  } catch (const json::exception& e) {
    throw DataError(std::string("bad encoder config: ") + e.what());
  }
  return cfg;
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  std::vector<std::pair<std::string, const DenseMatrix*>> tensors;
  for (std::size_t l = 0; l < model.state.gcn_weights.size(); ++l) {
    tensors.emplace_back("gcn." + std::to_string(l), &model.state.gcn_weights[l]);
  }
  tensors.emplace_back("disc.w1", &model.state.disc.w1);
  tensors.emplace_back("disc.b1", &model.state.disc.b1);
  tensors.emplace_back("disc.w2", &model.state.disc.w2);
  tensors.emplace_back("disc.b2", &model.state.disc.b2);
  tensors.emplace_back("z", &model.embedding.z);

  json header;
  header["format"] = "KGT1";
  header["config"] = config_to_json(model.config);
  header["dataset"] = model.dataset;
  header["symbols"] = model.symbols;
  header["epoch"] = model.state.epoch;
  header["tensors"] = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : tensors) {
    header["tensors"].push_back(
        {{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}, {"offset", offset}});
    offset += 8 * m->size();
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write model file " + path.string());
  }
  out.write(kMagic, 4);
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, m] : tensors) {
    for (double v : m->values()) {
      v = to_little(v);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  if (!out) {
    throw DataError("failed writing model file " + path.string());
  }
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open model file " + path.string());
  }
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError(path.string() + ": not a KGT1 model file");
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
  header_len = to_little(header_len);
  if (!in || header_len > (1ULL << 30)) {
    throw DataError(path.string() + ": corrupt header length");
  }
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) {
    throw DataError(path.string() + ": truncated header");
  }
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad header: " + e.what());
  }

  const auto payload_start = in.tellg();
  std::map<std::string, DenseMatrix> tensors;
  for (const auto& t : header.at("tensors")) {
    const std::size_t rows = t.at("rows");
    const std::size_t cols = t.at("cols");
    const std::uint64_t offset = t.at("offset");
    in.seekg(payload_start + static_cast<std::streamoff>(offset));
    DenseMatrix m(rows, cols);
    for (double& v : m.values()) {
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      v = to_little(v);
    }
    if (!in) {
      throw DataError(path.string() + ": truncated tensor " + t.at("name").get<std::string>());
    }
    tensors.emplace(t.at("name").get<std::string>(), std::move(m));
  }

  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw DataError(path.string() + ": missing tensor " + name);
    }
    return std::move(it->second);
  };

  ModelFile model;
  model.config = config_from_json(header.at("config"));
  model.dataset = header.value("dataset", json::object());
  model.symbols = header.value("symbols", std::string());
  for (std::size_t l = 0; l < model.config.layer_count(); ++l) {
    model.state.gcn_weights.push_back(take("gcn." + std::to_string(l)));
    model.state.activations.push_back(model.config.activation(l));
  }
  model.state.disc = {take("disc.w1"), take("disc.b1"), take("disc.w2"), take("disc.b2")};
  model.state.epoch = header.value("epoch", std::size_t{0});
  model.embedding.z = take("z");
  return model;
}

}  // namespace kgt
