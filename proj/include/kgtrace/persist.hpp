#pragma once

#include "kgtrace/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace kgt {

nlohmann::json config_to_json(const EncoderConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
EncoderConfig config_from_json(const nlohmann::json& j);

struct ModelFile {
  EncoderConfig config;
  nlohmann::json dataset;  // how to reload the graph and labels
  std::string symbols;     // symbol table path, relative to the model file
  ModelState state;        // weights only; optimizer moments are not stored
  EmbeddingMatrix embedding;
};

// Layout, all integers and reals little-endian:
//   "KGT1" | u64 header length | JSON header | float64 tensor payload
// The header lists every tensor as {name, rows, cols, offset}, with offset in
// bytes from the start of the payload. The correlation matrix is never
// stored; it is recomputed from the embedding.
void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace kgt
