#include "rvc/config.hpp"

#include <json.hpp>
#include <set>
#include <sstream>

#include "rvc/error.hpp"
#include "rvc/image_io.hpp"

namespace rvc {

namespace {

using nlohmann::json;

const std::set<std::string> kTopKeys = {"resolution", "angles", "grammar", "ink", "max_symbols", "seed",
                                        "chains", "participants", "steps", "suite"};
const std::set<std::string> kStepKeys = {"classify_incremental", "classify_block", "generate_incremental",
                                         "generate_block", "ideal"};
const std::set<std::string> kSuiteKeys = {"classification_trials", "generation_trials", "min_segments",
                                          "max_segments", "seed", "generation_max_symbols"};

void check_keys(const json& j, const std::set<std::string>& allowed, const char* where) {
  if (!j.is_object()) throw ParseError(std::string(where) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ParseError(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

InkParams fitted_ink_params() {
  static const InkParams p = ink_params_from_json(
#include "builtin_ink.inc"
  );
  return p;
}

InkParams ink_params_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    return make_ink_params(j.at("ink_per_px").get<double>(), j.value("blur_sigma", 0.0),
                           j.at("epsilon").get<double>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("ink parameters: ") + e.what());
  }
}

std::string ink_params_to_json(const InkParams& p, std::optional<double> log_likelihood) {
  nlohmann::ordered_json j;
  j["ink_per_px"] = p.ink_per_px;
  j["blur_sigma"] = p.blur_sigma;
  j["epsilon"] = p.epsilon;
  if (log_likelihood) j["log_likelihood"] = *log_likelihood;
  return j.dump();
}

InkParams load_ink_params(const std::filesystem::path& path) { return ink_params_from_json(read_file(path)); }

std::string with_angles(std::string_view grammar_text, const std::vector<double>& angles) {
  std::ostringstream line;
  line << "angles:";
  for (double a : angles) line << ' ' << a;
  std::istringstream in{std::string(grammar_text)};
  std::ostringstream out;
  bool replaced = false;
  for (std::string l; std::getline(in, l);) {
    const auto first = l.find_first_not_of(" \t");
    if (first != std::string::npos && l.compare(first, 7, "angles:") == 0) {
      if (!replaced) out << line.str() << '\n';
      replaced = true;
      continue;
    }
    out << l << '\n';
  }
  if (!replaced) return line.str() + "\n" + out.str();
  return out.str();
}

void RunConfig::finalize() {
  if (resolution < 8) throw Error("resolution must be at least 8");
  if (max_symbols < 1) throw Error("max_symbols must be positive");
  if (chains < 1) throw Error("chains must be at least 1");
  for (std::size_t n : {steps.classify_incremental, steps.classify_block, steps.generate_incremental,
                        steps.generate_block, steps.ideal}) {
    if (n < 1) throw Error("chain lengths must be at least 1");
  }
  if (suite.segments.min > suite.segments.max) throw Error("min_segments exceeds max_segments");
  std::string text = grammar_path ? read_file(*grammar_path) : std::string(MetaGrammar::builtin_text());
  if (angles) {
    if (angles->empty()) throw Error("angle set is empty");
    text = with_angles(text, *angles);
  }
  grammar = std::make_shared<const MetaGrammar>(MetaGrammar::parse(text));
  if (ink_path) ink = load_ink_params(*ink_path);
  check_ink_params(ink);
}

ModelConfig RunConfig::model() const {
  if (!grammar) throw Error("run config used before finalize()");
  ModelConfig m;
  m.grammar = grammar.get();
  m.render.res = {resolution, resolution};
  m.render.ink = ink;
  m.max_symbols = max_symbols;
  return m;
}

std::size_t RunConfig::classify_steps(Condition c) const {
  return c == Condition::Incremental ? steps.classify_incremental : steps.classify_block;
}

std::size_t RunConfig::generate_steps(Condition c) const {
  return c == Condition::Incremental ? steps.generate_incremental : steps.generate_block;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.ink = fitted_ink_params();
  try {
    const json j = json::parse(text);
    check_keys(j, kTopKeys, "config");
    read(j, "resolution", c.resolution);
    if (j.contains("angles")) c.angles = j.at("angles").get<std::vector<double>>();
    if (j.contains("grammar")) c.grammar_path = resolve(base_dir, j.at("grammar").get<std::string>());
    if (j.contains("ink")) c.ink_path = resolve(base_dir, j.at("ink").get<std::string>());
    read(j, "max_symbols", c.max_symbols);
    read(j, "seed", c.seed);
    read(j, "chains", c.chains);
    read(j, "participants", c.participants);
    if (j.contains("steps")) {
      const json& s = j.at("steps");
      check_keys(s, kStepKeys, "steps");
      read(s, "classify_incremental", c.steps.classify_incremental);
      read(s, "classify_block", c.steps.classify_block);
      read(s, "generate_incremental", c.steps.generate_incremental);
      read(s, "generate_block", c.steps.generate_block);
      read(s, "ideal", c.steps.ideal);
    }
    if (j.contains("suite")) {
      const json& s = j.at("suite");
      check_keys(s, kSuiteKeys, "suite");
      read(s, "classification_trials", c.suite.classification_trials);
      read(s, "generation_trials", c.suite.generation_trials);
      read(s, "min_segments", c.suite.segments.min);
      read(s, "max_segments", c.suite.segments.max);
      read(s, "seed", c.suite.seed);
      read(s, "generation_max_symbols", c.suite.generation_max_symbols);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  c.finalize();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

RunConfig default_run_config() {
  RunConfig c;
  c.ink = fitted_ink_params();
  c.finalize();
  return c;
}

}  // namespace rvc
