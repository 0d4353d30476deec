#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rvc/grammar.hpp"
#include "rvc/renderer.hpp"

namespace rvc {

/// Mixture weights of the three proposal kinds. In known-depth problems the
/// depth weight is redistributed proportionally over the other two.
struct ProposalWeights {
  double regenerate = 0.7;
  double angle = 0.2;
  double depth = 0.1;
};

struct ModelConfig {
  const MetaGrammar* grammar = &MetaGrammar::builtin();
  RenderSettings render{};
  ProposalWeights weights{};
  std::size_t max_symbols = kMaxSymbols;
};

enum class DepthMode { Known, Unknown };

struct Observation {
  BinaryImage image;
  int depth = 0;  ///< ignored in unknown-depth problems
};

/// Either P(L | I_0..I_K) with known depths, or P(L, j | I_j) with j latent.
struct InferenceProblem {
  DepthMode mode = DepthMode::Known;
  std::vector<Observation> observations;

  static InferenceProblem known(std::vector<BinaryImage> images, std::vector<int> depths);
  static InferenceProblem unknown(BinaryImage image);

  /// Throws DimensionMismatch if the images disagree, Error if empty.
  Resolution resolution() const;
  /// Deepest observed depth (known-depth mode).
  int max_depth() const;
};

struct ChainState {
  DerivationTree tree;
  LSystem lsystem;
  int depth = 0;  ///< latent depth j (unknown-depth mode), already cap-decremented
  double log_prior = 0.0;
  double log_likelihood = 0.0;
  double log_posterior = 0.0;
};

/// Scores hypotheses against one problem and memoizes likelihoods by
/// (F-rule, angle, depth). Not thread-safe; use one per thread.
class Evaluator {
 public:
  Evaluator(const ModelConfig& config, const InferenceProblem& problem);

  const ModelConfig& config() const { return config_; }
  const InferenceProblem& problem() const { return problem_; }

  /// Largest d' <= d whose expansion fits the symbol cap.
  int legal_depth(const LSystem& l, int depth) const;

  /// Log-likelihood of every observation under `l` (with latent depth `j`
  /// in unknown-depth mode), using cap-decremented depths.
  double log_likelihood(const LSystem& l, int j);

  /// Builds a fully scored state.
  ChainState make_state(DerivationTree tree, int j);

  /// Recomputes every cached quantity from scratch, bypassing the memo.
  ChainState rescore(const ChainState& s);

  /// Ink render of the state's program at the next depth.
  InkMap predictive(const ChainState& s);
  /// Depth used for the next-step prediction, after cap decrement.
  int predictive_depth(const ChainState& s) const;
  /// Next-step string of the state's program (after cap decrement).
  SymbolString predictive_string(const ChainState& s) const;
  /// The state's own string for the most mature observation.
  SymbolString mature_string(const ChainState& s) const;

  std::size_t memo_size() const { return memo_.size(); }
  std::size_t renders() const { return renders_; }

  Rasterizer& rasterizer() { return raster_; }

 private:
  double score_uncached(const LSystem& l, int j);

  const ModelConfig& config_;
  const InferenceProblem& problem_;
  std::vector<std::size_t> n_black_;
  Rasterizer raster_;
  std::vector<Segment> segs_;
  std::unordered_map<std::string, double> memo_;
  std::size_t renders_ = 0;
};

/// Draws the initial state from the prior.
ChainState initial_state(Evaluator& ev, Rng& rng);

/// One Metropolis-Hastings transition; returns true when the proposal was accepted.
bool mh_step(ChainState& state, Evaluator& ev, Rng& rng);

struct TraceRecord {
  std::size_t step = 0;
  double log_posterior = 0.0;
  int depth = 0;
  std::string f_rule;
  double angle_deg = 0.0;
  bool accepted = false;
};

struct ChainOptions {
  std::size_t n_steps = 1000;
  std::uint64_t seed = 0;
  /// Step counts at which to snapshot the state (0 = the initial draw).
  std::vector<std::size_t> checkpoints;
  /// Record every `thin`-th step in the trace; 0 disables tracing.
  std::size_t thin = 0;
};

struct ChainResult {
  ChainState final_state;
  ChainState best;  ///< highest log-posterior state visited
  std::vector<ChainState> checkpoints;
  std::vector<TraceRecord> trace;
  std::size_t accepted = 0;
};

ChainResult run_chain(Evaluator& ev, const ChainOptions& options);
ChainResult run_chain(const ModelConfig& config, const InferenceProblem& problem,
                      std::size_t n_steps, std::uint64_t seed);

/// Several independent chains; returns the best-by-posterior state over all of them.
ChainState best_of_chains(Evaluator& ev, std::size_t n_chains, std::size_t n_steps,
                          std::uint64_t seed);

/// Line-delimited JSON, one object per record.
void write_trace_jsonl(std::ostream& out, std::span<const TraceRecord> trace);

/// log P(candidate | state's next-step render).
double posterior_predictive_score(Evaluator& ev, const ChainState& s, const BinaryImage& candidate);

/// Index of the best-scoring candidate; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const double> scores);

/// Scores every candidate with `s` and returns the chosen index.
std::size_t choose_candidate(Evaluator& ev, const ChainState& s,
                             std::span<const BinaryImage> candidates);

/// Runs one chain and decides with its last sample.
std::size_t classify(const ModelConfig& config, const InferenceProblem& problem,
                     std::span<const BinaryImage> candidates, std::size_t n_steps,
                     std::uint64_t seed);

/// The segment-toggle response surface over a mature exemplar.
class ToggleInterface {
 public:
  /// `base` is the displayed string; `rules` decides how activated segments grow.
  ToggleInterface(SymbolString base, LSystem rules, RenderSettings settings);

  const SymbolString& base() const { return base_; }
  const LSystem& rules() const { return rules_; }
  const RenderSettings& settings() const { return settings_; }
  /// Symbol positions of the toggleable (forward) segments.
  const std::vector<std::size_t>& positions() const { return positions_; }
  std::size_t size() const { return positions_.size(); }

  /// Assignment shown before any click: nothing activated.
  std::vector<std::uint8_t> initial_assignment() const;
  /// F positions of `s` when it draws the same path as the base (same turns,
  /// separators and segment count, F and G interchangeable); nullopt otherwise.
  std::optional<std::vector<std::uint8_t>> activation_of(const SymbolString& s) const;
  /// Display string with position k set to F when assignment[k] is 1.
  SymbolString apply(std::span<const std::uint8_t> assignment) const;
  /// Next-step string: apply() expanded once with the interface rules.
  SymbolString next_string(std::span<const std::uint8_t> assignment) const;
  /// Display-pen image of next_string(). Throws DimensionMismatch on wrong length.
  BinaryImage next_image(std::span<const std::uint8_t> assignment) const;
  BinaryImage next_image(std::span<const std::uint8_t> assignment, Rasterizer& raster,
                         std::vector<Segment>& scratch) const;

 private:
  SymbolString base_;
  LSystem rules_;
  RenderSettings settings_;
  std::vector<std::size_t> positions_;
};

enum class SegmentOrder { Random, Fixed };

/// Greedy pass: visit each segment once and keep whichever of its two states
/// scores higher under `s`'s next-step predictive. Starts from the state's own
/// activation pattern when its mature string draws the displayed path, else
/// from the interface's initial assignment. Responses are drawn in the frame
/// of the predicted image. Exactly 2m response renders.
std::vector<std::uint8_t> greedy_assignment(Evaluator& ev, const ChainState& s,
                                            const ToggleInterface& ui, Rng& rng,
                                            SegmentOrder order = SegmentOrder::Random,
                                            std::size_t* renders = nullptr);

/// Runs one chain, then the greedy pass with its last sample.
std::vector<std::uint8_t> generate_via_interface(const ModelConfig& config,
                                                 const InferenceProblem& problem,
                                                 const ToggleInterface& ui, std::size_t n_steps,
                                                 std::uint64_t seed,
                                                 SegmentOrder order = SegmentOrder::Random);

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware concurrency).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = 0);

}  // namespace rvc
