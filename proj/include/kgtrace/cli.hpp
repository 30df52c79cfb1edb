#pragma once

#include "kgtrace/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kgt {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

// Everything a command needs. The JSON config file mirrors this layout:
//   {"seed": 7, "out": "runs/a", "dataset": {...descriptor...},
//    "encoder": {...EncoderConfig...},
//    "task": {"k": 4, "restarts": 10, "test_ratios": [0.1],
//             "node": "...", "levels": 2, "degree": 3}}
struct RunConfig {
  nlohmann::json dataset = {{"kind", "kg"}};
  EncoderConfig encoder;
  std::optional<std::size_t> k;
  std::size_t restarts = 10;
  std::vector<double> test_ratios{0.05, 0.10, 0.20, 0.30, 0.50};
  std::string node;
  std::size_t levels = 2;
  std::size_t degree = 3;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
};

RunConfig run_config_from_json(const nlohmann::json& j);

// Entry point of the `kgtrace` binary. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kgt
