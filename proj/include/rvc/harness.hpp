#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvc/inference.hpp"

namespace rvc {

enum class Condition { Incremental, Block };

const char* to_string(Condition c);
Condition parse_condition(std::string_view s);

/// Observed depths shown to the observer: classification (K = 2) or generation (K = 3).
std::vector<int> observed_depths(Condition c, int mature_depth);

/// The inference problem an observer solves: all depths in the incremental
/// condition, only the mature image with latent depth in the block condition.
InferenceProblem make_problem(Condition c, std::span<const BinaryImage> observed,
                              std::span<const int> depths);

struct ClassificationTrial {
  std::string id;
  LSystem lsystem;
  Condition condition = Condition::Incremental;
  std::vector<int> depths;
  std::vector<BinaryImage> observed;
  std::vector<LSystem> distractor_sources;
  std::vector<BinaryImage> candidates;
  std::size_t truth = 0;

  const BinaryImage& mature() const { return observed.back(); }
  InferenceProblem problem() const { return make_problem(condition, observed, depths); }
};

struct GenerationTrial {
  std::string id;
  LSystem lsystem;
  Condition condition = Condition::Incremental;
  std::vector<int> depths;
  std::vector<BinaryImage> observed;
  ToggleInterface ui;
  std::vector<std::uint8_t> truth_assignment;  ///< F positions of S_3
  BinaryImage truth_image;                     ///< display render of S_4

  const BinaryImage& mature() const { return observed.back(); }
  InferenceProblem problem() const { return make_problem(condition, observed, depths); }
};

/// Display render of S_d for each requested depth (no symbol cap).
std::vector<BinaryImage> render_steps(const LSystem& l, std::span<const int> depths,
                                      const RenderSettings& settings);

/// True answer: S_3. Distractors: S_2 expanded once with each source's rules,
/// drawn at the concept's angle. `seed` places the true answer. Throws
/// DegenerateDistractor when a distractor repeats the true answer.
ClassificationTrial build_classification_trial(const LSystem& lsystem,
                                               std::span<const LSystem> distractor_sources,
                                               Condition condition, std::uint64_t seed,
                                               const RenderSettings& settings);

struct SegmentBounds {
  std::size_t min = 22;
  std::size_t max = 125;
};

/// Interface over S_3 whose activated segments grow with the concept's
/// rules. Throws TooFewSegments / TooManySegments outside `bounds` when given.
GenerationTrial build_generation_trial(const LSystem& lsystem, Condition condition,
                                       const RenderSettings& settings,
                                       std::optional<SegmentBounds> bounds = SegmentBounds{});

struct GenerationScore {
  double segment_accuracy = 0.0;
  bool exact_visual_match = false;
};

GenerationScore evaluate_generation(std::span<const std::uint8_t> response, const GenerationTrial& trial);

/// Distance between binary images; nonnegative and zero on identical inputs.
struct SimilarityMetric {
  std::string name;
  std::function<double(const BinaryImage&, const BinaryImage&)> distance;
};

/// sqrt of the number of disagreeing pixels.
double euclidean_distance(const BinaryImage& a, const BinaryImage& b);
/// max of the two directed mean nearest-black-pixel distances. Throws EmptyImage.
double modified_hausdorff(const BinaryImage& a, const BinaryImage& b);

SimilarityMetric euclidean_metric();
SimilarityMetric hausdorff_metric();
/// Cosine distance between embeddings looked up by image_digest. The file is
/// JSON: {"<digest>": [x0, x1, ...], ...}. Unknown images throw Error.
SimilarityMetric embedding_metric(const std::filesystem::path& embeddings, std::string name = "external");

/// log P(candidate | S_j rendered without recursive expansion).
double nonrecursive_score(const SymbolString& mature, double angle_deg, const BinaryImage& candidate,
                          const RenderSettings& settings);

/// Candidate nearest to `mature` under the metric (ties to the lowest index).
std::size_t metric_classify(const SimilarityMetric& metric, const BinaryImage& mature,
                            std::span<const BinaryImage> candidates);
std::size_t nonrecursive_classify(const ClassificationTrial& trial, const RenderSettings& settings);

/// Assignments reachable by at most one flip from all-off or all-on.
std::vector<std::vector<std::uint8_t>> anchor_neighbourhood(std::size_t m);
/// Best assignment in anchor_neighbourhood under `score` (higher is better).
std::vector<std::uint8_t> anchor_search(const GenerationTrial& trial,
                                        const std::function<double(const BinaryImage&)>& score);
std::vector<std::uint8_t> metric_generate(const SimilarityMetric& metric, const GenerationTrial& trial);
std::vector<std::uint8_t> nonrecursive_generate(const GenerationTrial& trial);

struct SuiteOptions {
  std::size_t classification_trials = 24;
  std::size_t generation_trials = 13;
  SegmentBounds segments{};
  std::uint64_t seed = 1;
  std::size_t max_attempts = 200000;
  /// Longest S_4 admitted into the generation suite.
  std::size_t generation_max_symbols = 1024;
};

struct Suite {
  std::vector<ClassificationTrial> classification;
  std::vector<GenerationTrial> generation;
};

/// Distinct stimulus concepts whose S_3 fits the symbol cap.
std::vector<LSystem> sample_concepts(const ModelConfig& config, std::size_t n, std::uint64_t seed,
                                     std::size_t max_attempts = 200000);

/// Normalized length of one unit step in the display of S_3.
double normalized_segment_length(const LSystem& l, const RenderSettings& settings);

/// Regenerates both task suites for one condition. Classification trials
/// satisfy: distinct candidates, none equal to the mature image, and the true
/// answer is the unique argmax of the true program's predictive. Generation
/// concepts are the classification concepts (then fresh samples) with the
/// largest normalized segment length among those within the segment bounds.
Suite build_suite(const ModelConfig& config, Condition condition, const SuiteOptions& options);

/// Symbol cap for a generation experiment: the smallest power of two that
/// holds every trial's S_4, and at least `floor`. run_generation and
/// generation_dose_response apply it to their config.
std::size_t generation_cap(std::span<const GenerationTrial> trials, std::size_t floor);

/// The ground-truth state of a concept for a trial problem.
ChainState true_state(Evaluator& ev, const LSystem& lsystem, int depth);

enum class ModelKind { Bpl, NonRecursive, Metric, Random };

struct ModelSpec {
  ModelKind kind = ModelKind::Bpl;
  std::string name = "bpl";
  std::size_t n_steps = 20000;
  /// 0: ideal observer (best-by-posterior over `n_chains`); otherwise the
  /// number of simulated participants, each one chain deciding by its last sample.
  std::size_t n_participants = 0;
  std::size_t n_chains = 4;
  SimilarityMetric metric{};
};

ModelSpec parse_model(std::string_view name, const std::optional<std::filesystem::path>& embeddings = {});

struct TrialResult {
  std::string id;
  double accuracy = 0.0;          ///< classification: fraction correct; generation: exact-match rate
  double segment_accuracy = 0.0;  ///< generation only
  std::size_t decisions = 0;
};

struct Report {
  std::string task;  ///< "classify" or "generate"
  std::string model;
  std::vector<TrialResult> trials;
  double mean_accuracy = 0.0;
  double mean_segment_accuracy = 0.0;
};

Report run_classification(const ModelConfig& config, std::span<const ClassificationTrial> trials,
                          const ModelSpec& model, std::uint64_t seed);
Report run_generation(const ModelConfig& config, std::span<const GenerationTrial> trials,
                      const ModelSpec& model, std::uint64_t seed);

/// Accuracy at each chain length, from checkpoints of one chain per
/// participant and trial. `levels` need not be sorted.
struct DoseResponse {
  std::vector<std::size_t> levels;
  std::vector<double> accuracy;          ///< classification accuracy or generation exact-match
  std::vector<double> segment_accuracy;  ///< generation only
};

DoseResponse classification_dose_response(const ModelConfig& config,
                                          std::span<const ClassificationTrial> trials,
                                          std::span<const std::size_t> levels,
                                          std::size_t n_participants, std::uint64_t seed);
DoseResponse generation_dose_response(const ModelConfig& config,
                                      std::span<const GenerationTrial> trials,
                                      std::span<const std::size_t> levels,
                                      std::size_t n_participants, std::uint64_t seed);

/// Per-trial accuracy of limited-chain participants at one chain length.
Report simulate_participants(const ModelConfig& config, std::span<const ClassificationTrial> trials,
                             std::size_t n_participants, std::size_t n_steps, std::uint64_t seed);

/// Tab-separated per-trial rows.
void write_report_tsv(std::ostream& out, const Report& r);
/// One summary row per report, in the layout of a model-comparison table.
std::string summary_table(std::span<const Report> classification, std::span<const Report> generation);

/// Suite files: JSON with inline concepts and candidate images stored as P4
/// files next to it.
void save_suite(const std::filesystem::path& path, const Suite& suite);
Suite load_suite(const std::filesystem::path& path, const RenderSettings& settings);

}  // namespace rvc
