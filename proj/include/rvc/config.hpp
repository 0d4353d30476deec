#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvc/harness.hpp"

namespace rvc {

/// Chain lengths used by each experiment and condition.
struct ChainLengths {
  std::size_t classify_incremental = 240;
  std::size_t classify_block = 240;
  std::size_t generate_incremental = 160;
  std::size_t generate_block = 80;
  std::size_t ideal = 100000;  ///< long-chain (ideal observer) runs
};

/// Everything a CLI run or the service needs. Loaded from JSON:
///
///     {
///       "resolution": 200,
///       "angles": [30, 45, 60, 90],
///       "grammar": "data/default.grammar",
///       "ink": "data/ink.json",
///       "max_symbols": 512,
///       "seed": 1,
///       "chains": 4,
///       "participants": 15,
///       "steps": {"classify_incremental": 240, "generate_block": 80},
///       "suite": {"classification_trials": 24, "generation_trials": 13,
///                 "min_segments": 22, "max_segments": 125, "seed": 1}
///     }
///
/// Every field is optional. Relative paths resolve against the config file.
struct RunConfig {
  int resolution = 200;
  std::optional<std::vector<double>> angles;
  std::optional<std::filesystem::path> grammar_path;
  std::optional<std::filesystem::path> ink_path;
  std::size_t max_symbols = kMaxSymbols;
  std::uint64_t seed = 1;
  std::size_t chains = 4;
  std::size_t participants = 15;
  ChainLengths steps{};
  SuiteOptions suite{};

  std::shared_ptr<const MetaGrammar> grammar;  ///< resolved by finalize()
  InkParams ink{};

  /// Loads the grammar and ink files and validates every field. Throws Error.
  void finalize();
  /// A model configuration that borrows this config's grammar.
  ModelConfig model() const;
  std::size_t classify_steps(Condition c) const;
  std::size_t generate_steps(Condition c) const;
};

/// Throws ParseError on malformed JSON or unknown keys, Error on missing files.
RunConfig parse_run_config(std::string_view json, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);
/// Defaults: built-in grammar and the shipped fitted ink parameters.
RunConfig default_run_config();

/// Ink parameters fitted to display-pen scribbles, shipped as data/ink.json.
InkParams fitted_ink_params();

/// Ink parameter files: {"ink_per_px": 14.2, "blur_sigma": 0.24, "epsilon": 1.3e-6}.
InkParams ink_params_from_json(std::string_view json);
std::string ink_params_to_json(const InkParams& p, std::optional<double> log_likelihood = {});
InkParams load_ink_params(const std::filesystem::path& path);

/// Grammar text with its `angles:` line replaced.
std::string with_angles(std::string_view grammar_text, const std::vector<double>& angles);

}  // namespace rvc
