#include "rvc/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "rvc/concept_io.hpp"
#include "rvc/error.hpp"
#include "rvc/image_io.hpp"

namespace rvc {

namespace {

constexpr std::size_t kNoCap = std::numeric_limits<std::size_t>::max();

std::string trial_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%02zu", prefix, i);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

const char* to_string(Condition c) { return c == Condition::Incremental ? "incremental" : "block"; }

Condition parse_condition(std::string_view s) {
  if (s == "incremental") return Condition::Incremental;
  if (s == "block") return Condition::Block;
  throw ParseError("unknown condition '" + std::string(s) + "'");
}

std::vector<int> observed_depths(Condition c, int mature_depth) {
  std::vector<int> d;
  if (c == Condition::Incremental) {
    for (int k = 0; k <= mature_depth; ++k) d.push_back(k);
  } else {
    d = {0, mature_depth};
  }
  return d;
}

InferenceProblem make_problem(Condition c, std::span<const BinaryImage> observed, std::span<const int> depths) {
  if (observed.empty() || observed.size() != depths.size()) throw Error("malformed trial observations");
  if (c == Condition::Block) return InferenceProblem::unknown(observed.back());
  return InferenceProblem::known({observed.begin(), observed.end()}, {depths.begin(), depths.end()});
}

std::vector<BinaryImage> render_steps(const LSystem& l, std::span<const int> depths,
                                      const RenderSettings& settings) {
  Rasterizer raster(settings.res);
  std::vector<Segment> scratch;
  std::vector<BinaryImage> out;
  for (int d : depths) {
    out.push_back(render_display(expand_to_depth(l, d, kNoCap), l.angle_deg, settings, raster, scratch));
  }
  return out;
}

ClassificationTrial build_classification_trial(const LSystem& lsystem,
                                               std::span<const LSystem> distractor_sources,
                                               Condition condition, std::uint64_t seed,
                                               const RenderSettings& settings) {
  if (distractor_sources.size() != 5) throw Error("a classification trial needs 5 distractor sources");
  ClassificationTrial t;
  t.lsystem = lsystem;
  t.condition = condition;
  t.depths = observed_depths(condition, 2);
  t.observed = render_steps(lsystem, t.depths, settings);
  t.distractor_sources.assign(distractor_sources.begin(), distractor_sources.end());

  Rasterizer raster(settings.res);
  std::vector<Segment> scratch;
  const SymbolString s2 = expand_to_depth(lsystem, 2, kNoCap);
  const BinaryImage truth =
      render_display(expand_once(s2, lsystem, kNoCap), lsystem.angle_deg, settings, raster, scratch);
  std::vector<BinaryImage> distractors;
  for (const LSystem& src : distractor_sources) {
    if (src.f_rule == lsystem.f_rule && src.g_rule == lsystem.g_rule) {
      throw DegenerateDistractor("distractor source has the lsystem's own rules");
    }
    LSystem rules = lsystem;
    rules.f_rule = src.f_rule;
    rules.g_rule = src.g_rule;
    BinaryImage img = render_display(expand_once(s2, rules, kNoCap), lsystem.angle_deg, settings, raster, scratch);
    if (img == truth) throw DegenerateDistractor("distractor renders identically to the true answer");
    for (const auto& other : distractors) {
      if (other == img) throw DegenerateDistractor("two distractors render identically");
    }
    distractors.push_back(std::move(img));
  }
  Rng rng(seed);
  t.truth = uniform_index(rng, 6);
  std::size_t k = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    t.candidates.push_back(i == t.truth ? truth : distractors[k++]);
  }
  return t;
}

GenerationTrial build_generation_trial(const LSystem& lsystem, Condition condition,
                                       const RenderSettings& settings, std::optional<SegmentBounds> bounds) {
  const SymbolString s3 = expand_to_depth(lsystem, 3, kNoCap);
  const std::size_t m = s3.count_forward();
  if (bounds && m < bounds->min) {
    throw TooFewSegments("S_3 has " + std::to_string(m) + " segments, fewer than " + std::to_string(bounds->min));
  }
  if (bounds && m > bounds->max) {
    throw TooManySegments("S_3 has " + std::to_string(m) + " segments, more than " + std::to_string(bounds->max));
  }
  GenerationTrial t{.id = {},
                    .lsystem = lsystem,
                    .condition = condition,
                    .depths = observed_depths(condition, 3),
                    .observed = {},
                    .ui = ToggleInterface(s3, lsystem, settings),
                    .truth_assignment = {},
                    .truth_image = {}};
  t.observed = render_steps(lsystem, t.depths, settings);
  for (std::size_t pos : t.ui.positions()) t.truth_assignment.push_back(s3[pos] == 'F' ? 1 : 0);
  t.truth_image = t.ui.next_image(t.truth_assignment);
  return t;
}

GenerationScore evaluate_generation(std::span<const std::uint8_t> response, const GenerationTrial& trial) {
  if (response.size() != trial.truth_assignment.size()) {
    throw DimensionMismatch("assignment has " + std::to_string(response.size()) + " entries, trial has " +
                            std::to_string(trial.truth_assignment.size()) + " segments");
  }
  GenerationScore s;
  std::size_t agree = 0;
  for (std::size_t k = 0; k < response.size(); ++k) agree += (response[k] != 0) == (trial.truth_assignment[k] != 0);
  s.segment_accuracy = response.empty() ? 1.0 : static_cast<double>(agree) / static_cast<double>(response.size());
  s.exact_visual_match = trial.ui.next_image(response) == trial.truth_image;
  return s;
}

double euclidean_distance(const BinaryImage& a, const BinaryImage& b) {
  if (!(a.res == b.res)) throw DimensionMismatch("images differ in resolution");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) diff += a.pixels[i] != b.pixels[i];
  return std::sqrt(static_cast<double>(diff));
}

namespace {

// Exact squared Euclidean distance to the nearest black pixel (Felzenszwalb-Huttenlocher).
std::vector<double> squared_distance_transform(const BinaryImage& img) {
  const int W = img.res.width, H = img.res.height;
  const double inf = 1e20;
  std::vector<double> dt(img.pixels.size());
  for (std::size_t i = 0; i < dt.size(); ++i) dt[i] = img.pixels[i] ? 0.0 : inf;
  const int n_max = std::max(W, H);
  std::vector<double> f(n_max), d(n_max), z(n_max + 1);
  std::vector<int> v(n_max);
  auto pass = [&](int n) {
    int k = 0;
    v[0] = 0;
    z[0] = -inf;
    z[1] = inf;
    auto meet = [&](int q, int p) {
      return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
    };
    for (int q = 1; q < n; ++q) {
      double s = meet(q, v[k]);
      while (s <= z[k]) s = meet(q, v[--k]);
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = inf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
      while (z[k + 1] < q) ++k;
      d[q] = double(q - v[k]) * (q - v[k]) + f[v[k]];
    }
  };
  for (int x = 0; x < W; ++x) {
    for (int y = 0; y < H; ++y) f[y] = dt[static_cast<std::size_t>(y) * W + x];
    pass(H);
    for (int y = 0; y < H; ++y) dt[static_cast<std::size_t>(y) * W + x] = d[y];
  }
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) f[x] = dt[static_cast<std::size_t>(y) * W + x];
    pass(W);
    for (int x = 0; x < W; ++x) dt[static_cast<std::size_t>(y) * W + x] = d[x];
  }
  return dt;
}

double directed_mean_distance(const BinaryImage& from, const std::vector<double>& to_dt) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < from.pixels.size(); ++i) {
    if (!from.pixels[i]) continue;
    sum += std::sqrt(to_dt[i]);
    ++n;
  }
  return sum / static_cast<double>(n);
}

}  // namespace

double modified_hausdorff(const BinaryImage& a, const BinaryImage& b) {
  if (!(a.res == b.res)) throw DimensionMismatch("images differ in resolution");
  if (a.count_black() == 0 || b.count_black() == 0) throw EmptyImage("modified Hausdorff needs black pixels in both images");
  const double ab = directed_mean_distance(a, squared_distance_transform(b));
  const double ba = directed_mean_distance(b, squared_distance_transform(a));
  return std::max(ab, ba);
}

SimilarityMetric euclidean_metric() { return {"euclidean", euclidean_distance}; }

SimilarityMetric hausdorff_metric() { return {"hausdorff", modified_hausdorff}; }

SimilarityMetric embedding_metric(const std::filesystem::path& embeddings, std::string name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(embeddings));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("embeddings: ") + e.what());
  }
  auto table = std::make_shared<std::unordered_map<std::string, std::vector<double>>>();
  for (auto it = j.begin(); it != j.end(); ++it) (*table)[it.key()] = it.value().get<std::vector<double>>();
  auto lookup = [table](const BinaryImage& img) -> const std::vector<double>& {
    auto it = table->find(image_digest(img));
    if (it == table->end()) throw Error("no embedding for image " + image_digest(img));
    return it->second;
  };
  return {std::move(name), [lookup](const BinaryImage& a, const BinaryImage& b) {
            const auto& x = lookup(a);
            const auto& y = lookup(b);
            if (x.size() != y.size()) throw DimensionMismatch("embedding sizes differ");
            double dot = 0.0, nx = 0.0, ny = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
              dot += x[i] * y[i];
              nx += x[i] * x[i];
              ny += y[i] * y[i];
            }
            if (nx == 0.0 || ny == 0.0) return x == y ? 0.0 : 1.0;
            return std::max(0.0, 1.0 - dot / std::sqrt(nx * ny));
          }};
}

double nonrecursive_score(const SymbolString& mature, double angle_deg, const BinaryImage& candidate,
                          const RenderSettings& settings) {
  Rasterizer raster(settings.res);
  std::vector<Segment> scratch;
  return log_likelihood(candidate, render_ink(mature, angle_deg, settings, raster, scratch));
}

std::size_t metric_classify(const SimilarityMetric& metric, const BinaryImage& mature,
                            std::span<const BinaryImage> candidates) {
  std::vector<double> scores;
  for (const auto& c : candidates) scores.push_back(-metric.distance(c, mature));
  return argmax_lowest(scores);
}

std::size_t nonrecursive_classify(const ClassificationTrial& trial, const RenderSettings& settings) {
  const SymbolString mature = expand_to_depth(trial.lsystem, trial.depths.back(), kNoCap);
  Rasterizer raster(settings.res);
  std::vector<Segment> scratch;
  const InkMap m = render_ink(mature, trial.lsystem.angle_deg, settings, raster, scratch);
  std::vector<double> scores;
  for (const auto& c : trial.candidates) scores.push_back(log_likelihood(c, m));
  return argmax_lowest(scores);
}

std::vector<std::vector<std::uint8_t>> anchor_neighbourhood(std::size_t m) {
  std::vector<std::vector<std::uint8_t>> out;
  for (std::uint8_t anchor : {std::uint8_t{0}, std::uint8_t{1}}) {
    std::vector<std::uint8_t> a(m, anchor);
    out.push_back(a);
    for (std::size_t k = 0; k < m; ++k) {
      a[k] ^= 1;
      out.push_back(a);
      a[k] ^= 1;
    }
  }
  return out;
}

std::vector<std::uint8_t> anchor_search(const GenerationTrial& trial,
                                        const std::function<double(const BinaryImage&)>& score) {
  Rasterizer raster(trial.ui.settings().res);
  std::vector<Segment> scratch;
  std::vector<std::uint8_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (auto& a : anchor_neighbourhood(trial.ui.size())) {
    const double s = score(trial.ui.next_image(a, raster, scratch));
    if (best.empty() || s > best_score) {
      best_score = s;
      best = std::move(a);
    }
  }
  return best;
}

std::vector<std::uint8_t> metric_generate(const SimilarityMetric& metric, const GenerationTrial& trial) {
  const BinaryImage& mature = trial.mature();
  return anchor_search(trial, [&](const BinaryImage& img) { return -metric.distance(img, mature); });
}

std::vector<std::uint8_t> nonrecursive_generate(const GenerationTrial& trial) {
  const RenderSettings& settings = trial.ui.settings();
  Rasterizer raster(settings.res);
  std::vector<Segment> scratch;
  const InkMap m = render_ink(trial.ui.base(), trial.lsystem.angle_deg, settings, raster, scratch);
  return anchor_search(trial, [&](const BinaryImage& img) { return log_likelihood(img, m); });
}

std::vector<LSystem> sample_concepts(const ModelConfig& config, std::size_t n, std::uint64_t seed,
                                     std::size_t max_attempts) {
  Rng rng(seed);
  std::vector<LSystem> out;
  std::set<std::pair<std::string, double>> seen;
  for (std::size_t attempt = 0; out.size() < n; ++attempt) {
    if (attempt >= max_attempts) throw RejectionLimitExceeded(attempt, "distinct concepts");
    auto [l, tree] = sample_lsystem(*config.grammar, rng, SampleMode::Stimulus, kRejectionLimit, config.render.turns);
    if (expanded_length(expand_to_depth(l, 2, kNoCap), l) > config.max_symbols) continue;
    if (!seen.insert({l.f_rule.str(), l.angle_deg}).second) continue;
    out.push_back(std::move(l));
  }
  return out;
}

double normalized_segment_length(const LSystem& l, const RenderSettings& settings) {
  const TurtleTrajectory t = trace(expand_to_depth(l, 3, kNoCap), l.angle_deg, settings.turns);
  const BoundingBox b = bounding_box(t.segments);
  const double extent = b.width() > 1e-9 ? b.width() : b.height();
  return settings.common_width / extent;
}

ChainState true_state(Evaluator& ev, const LSystem& lsystem, int depth) {
  auto trees = parse_derivations(*ev.config().grammar, lsystem, 1);
  if (trees.empty()) throw NotInSupport("lsystem is not derivable in the grammar");
  return ev.make_state(std::move(trees.front()), depth);
}

namespace {

bool acceptable_classification(const ModelConfig& config, const ClassificationTrial& t) {
  for (const auto& c : t.candidates) {
    if (c == t.mature()) return false;
  }
  const InferenceProblem problem = t.problem();
  Evaluator ev(config, problem);
  const ChainState truth = true_state(ev, t.lsystem, 2);
  const InkMap m = ev.predictive(truth);
  const double best = log_likelihood(t.candidates[t.truth], m);
  for (std::size_t i = 0; i < t.candidates.size(); ++i) {
    if (i != t.truth && !(log_likelihood(t.candidates[i], m) < best)) return false;
  }
  return true;
}

}  // namespace

Suite build_suite(const ModelConfig& config, Condition condition, const SuiteOptions& options) {
  Suite suite;
  const std::vector<LSystem> concepts =
      sample_concepts(config, options.classification_trials, derive_seed(options.seed, 1), options.max_attempts);
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    const LSystem& lsystem = concepts[i];
    Rng rng(derive_seed(options.seed, 2, i));
    bool built = false;
    for (std::size_t attempt = 0; attempt < 1000 && !built; ++attempt) {
      std::vector<LSystem> sources;
      while (sources.size() < 5) {
        auto [src, tree] =
            sample_lsystem(*config.grammar, rng, SampleMode::Stimulus, kRejectionLimit, config.render.turns);
        if (src.f_rule == lsystem.f_rule || src.f_rule.count_forward() < 2) continue;
        bool dup = false;
        for (const auto& s : sources) dup = dup || s.f_rule == src.f_rule;
        if (!dup) sources.push_back(std::move(src));
      }
      try {
        ClassificationTrial t =
            build_classification_trial(lsystem, sources, condition, derive_seed(options.seed, 3, i), config.render);
        if (!acceptable_classification(config, t)) continue;
        t.id = trial_id('c', i);
        suite.classification.push_back(std::move(t));
        built = true;
      } catch (const DegenerateDistractor&) {
      }
    }
    if (!built) throw RejectionLimitExceeded(1000, "distinct distractors");
  }

  // Generation pool: classification concepts first, then fresh samples.
  struct Candidate {
    LSystem lsystem;
    double seg_len;
    std::size_t order;
  };
  std::vector<Candidate> pool;
  std::set<std::pair<std::string, double>> seen;
  auto consider = [&](const LSystem& l) {
    if (!seen.insert({l.f_rule.str(), l.angle_deg}).second) return;
    const SymbolString s3 = expand_to_depth(l, 3, kNoCap);
    const std::size_t m = s3.count_forward();
    if (m < options.segments.min || m > options.segments.max) return;
    if (expanded_length(s3, l) > options.generation_max_symbols) return;
    pool.push_back({l, normalized_segment_length(l, config.render), pool.size()});
  };
  for (const auto& l : concepts) consider(l);
  Rng extra(derive_seed(options.seed, 4));
  for (std::size_t attempt = 0; pool.size() < options.generation_trials; ++attempt) {
    if (attempt >= options.max_attempts) throw RejectionLimitExceeded(attempt, "generation segment bounds");
    consider(sample_lsystem(*config.grammar, extra, SampleMode::Stimulus, kRejectionLimit, config.render.turns).first);
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Candidate& a, const Candidate& b) { return a.seg_len > b.seg_len; });
  for (std::size_t i = 0; i < options.generation_trials; ++i) {
    GenerationTrial t = build_generation_trial(pool[i].lsystem, condition, config.render, options.segments);
    t.id = trial_id('g', i);
    suite.generation.push_back(std::move(t));
  }
  return suite;
}

ModelSpec parse_model(std::string_view name, const std::optional<std::filesystem::path>& embeddings) {
  ModelSpec m;
  m.name = std::string(name);
  if (name == "bpl") {
    m.kind = ModelKind::Bpl;
  } else if (name == "nonrecursive") {
    m.kind = ModelKind::NonRecursive;
  } else if (name == "euclidean") {
    m.kind = ModelKind::Metric;
    m.metric = euclidean_metric();
  } else if (name == "hausdorff") {
    m.kind = ModelKind::Metric;
    m.metric = hausdorff_metric();
  } else if (name == "external") {
    if (!embeddings) throw Error("model 'external' needs an embeddings file");
    m.kind = ModelKind::Metric;
    m.metric = embedding_metric(*embeddings);
  } else if (name == "random") {
    m.kind = ModelKind::Random;
    m.n_participants = 1000;
  } else {
    throw Error("unknown model '" + std::string(name) + "'");
  }
  return m;
}

namespace {

template <class Trial, class Decide>
Report run_trials(const std::string& task, std::span<const Trial> trials, const ModelSpec& model, Decide decide) {
  Report r;
  r.task = task;
  r.model = model.name;
  r.trials.resize(trials.size());
  parallel_for(trials.size(), [&](std::size_t t) { r.trials[t] = decide(t); });
  std::vector<double> acc, seg;
  for (const auto& tr : r.trials) {
    acc.push_back(tr.accuracy);
    seg.push_back(tr.segment_accuracy);
  }
  r.mean_accuracy = mean_of(acc);
  r.mean_segment_accuracy = mean_of(seg);
  return r;
}

}  // namespace

Report run_classification(const ModelConfig& config, std::span<const ClassificationTrial> trials,
                          const ModelSpec& model, std::uint64_t seed) {
  return run_trials<ClassificationTrial>("classify", trials, model, [&](std::size_t t) {
    const ClassificationTrial& trial = trials[t];
    TrialResult res;
    res.id = trial.id;
    std::size_t correct = 0;
    switch (model.kind) {
      case ModelKind::Bpl: {
        const InferenceProblem problem = trial.problem();
        Evaluator ev(config, problem);
        if (model.n_participants == 0) {
          const ChainState s = best_of_chains(ev, model.n_chains, model.n_steps, derive_seed(seed, t));
          correct = choose_candidate(ev, s, trial.candidates) == trial.truth;
          res.decisions = 1;
        } else {
          for (std::size_t p = 0; p < model.n_participants; ++p) {
            ChainOptions o;
            o.n_steps = model.n_steps;
            o.seed = derive_seed(seed, t, p);
            const ChainResult cr = run_chain(ev, o);
            correct += choose_candidate(ev, cr.final_state, trial.candidates) == trial.truth;
          }
          res.decisions = model.n_participants;
        }
        break;
      }
      case ModelKind::NonRecursive:
        correct = nonrecursive_classify(trial, config.render) == trial.truth;
        res.decisions = 1;
        break;
      case ModelKind::Metric:
        correct = metric_classify(model.metric, trial.mature(), trial.candidates) == trial.truth;
        res.decisions = 1;
        break;
      case ModelKind::Random: {
        Rng rng(derive_seed(seed, t));
        const std::size_t n = std::max<std::size_t>(1, model.n_participants);
        for (std::size_t p = 0; p < n; ++p) correct += uniform_index(rng, trial.candidates.size()) == trial.truth;
        res.decisions = n;
        break;
      }
    }
    res.accuracy = static_cast<double>(correct) / static_cast<double>(res.decisions);
    return res;
  });
}

std::size_t generation_cap(std::span<const GenerationTrial> trials, std::size_t floor) {
  std::size_t longest = floor;
  for (const auto& t : trials) longest = std::max(longest, t.ui.next_string(t.truth_assignment).length());
  return std::bit_ceil(longest);
}

Report run_generation(const ModelConfig& base_config, std::span<const GenerationTrial> trials,
                      const ModelSpec& model, std::uint64_t seed) {
  ModelConfig config = base_config;
  config.max_symbols = generation_cap(trials, base_config.max_symbols);
  return run_trials<GenerationTrial>("generate", trials, model, [&](std::size_t t) {
    const GenerationTrial& trial = trials[t];
    TrialResult res;
    res.id = trial.id;
    std::vector<std::vector<std::uint8_t>> responses;
    switch (model.kind) {
      case ModelKind::Bpl: {
        const InferenceProblem problem = trial.problem();
        Evaluator ev(config, problem);
        if (model.n_participants == 0) {
          const ChainState s = best_of_chains(ev, model.n_chains, model.n_steps, derive_seed(seed, t));
          Rng rng(derive_seed(seed, t, 0x6f72646572ULL));
          responses.push_back(greedy_assignment(ev, s, trial.ui, rng));
        } else {
          for (std::size_t p = 0; p < model.n_participants; ++p) {
            ChainOptions o;
            o.n_steps = model.n_steps;
            o.seed = derive_seed(seed, t, p);
            const ChainResult cr = run_chain(ev, o);
            Rng rng(derive_seed(o.seed, 0x6f72646572ULL));
            responses.push_back(greedy_assignment(ev, cr.final_state, trial.ui, rng));
          }
        }
        break;
      }
      case ModelKind::NonRecursive:
        responses.push_back(nonrecursive_generate(trial));
        break;
      case ModelKind::Metric:
        responses.push_back(metric_generate(model.metric, trial));
        break;
      case ModelKind::Random: {
        Rng rng(derive_seed(seed, t));
        const std::size_t n = std::max<std::size_t>(1, model.n_participants);
        for (std::size_t p = 0; p < n; ++p) {
          std::vector<std::uint8_t> a(trial.ui.size());
          for (auto& bit : a) bit = static_cast<std::uint8_t>(uniform_index(rng, 2));
          responses.push_back(std::move(a));
        }
        break;
      }
    }
    double exact = 0.0, seg = 0.0;
    for (const auto& a : responses) {
      const GenerationScore s = evaluate_generation(a, trial);
      exact += s.exact_visual_match;
      seg += s.segment_accuracy;
    }
    res.decisions = responses.size();
    res.accuracy = exact / static_cast<double>(responses.size());
    res.segment_accuracy = seg / static_cast<double>(responses.size());
    return res;
  });
}

namespace {

template <class Trial, class Decide>
DoseResponse dose_response(const ModelConfig& config, std::span<const Trial> trials,
                           std::span<const std::size_t> levels, std::size_t n_participants, std::uint64_t seed,
                           Decide decide) {
  DoseResponse out;
  out.levels.assign(levels.begin(), levels.end());
  const std::size_t L = levels.size();
  const std::size_t n_steps = levels.empty() ? 0 : *std::max_element(levels.begin(), levels.end());
  // Per trial: [level] -> (sum of accuracy, sum of segment accuracy)
  std::vector<std::vector<std::pair<double, double>>> per_trial(trials.size(),
                                                                std::vector<std::pair<double, double>>(L));
  parallel_for(trials.size(), [&](std::size_t t) {
    const InferenceProblem problem = trials[t].problem();
    Evaluator ev(config, problem);
    for (std::size_t p = 0; p < n_participants; ++p) {
      ChainOptions o;
      o.n_steps = n_steps;
      o.seed = derive_seed(seed, t, p);
      o.checkpoints.assign(levels.begin(), levels.end());
      const ChainResult cr = run_chain(ev, o);
      // run_chain returns checkpoints sorted by step; map them back to the level order.
      std::vector<std::size_t> order(L);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return levels[a] < levels[b]; });
      for (std::size_t k = 0; k < L; ++k) {
        const auto [acc, seg] = decide(ev, trials[t], cr.checkpoints[k], o.seed);
        per_trial[t][order[k]].first += acc;
        per_trial[t][order[k]].second += seg;
      }
    }
  });
  for (std::size_t k = 0; k < L; ++k) {
    double acc = 0.0, seg = 0.0;
    for (const auto& tr : per_trial) {
      acc += tr[k].first;
      seg += tr[k].second;
    }
    const double n = static_cast<double>(trials.size() * n_participants);
    out.accuracy.push_back(n > 0 ? acc / n : 0.0);
    out.segment_accuracy.push_back(n > 0 ? seg / n : 0.0);
  }
  return out;
}

}  // namespace

DoseResponse classification_dose_response(const ModelConfig& config, std::span<const ClassificationTrial> trials,
                                          std::span<const std::size_t> levels, std::size_t n_participants,
                                          std::uint64_t seed) {
  return dose_response<ClassificationTrial>(
      config, trials, levels, n_participants, seed,
      [](Evaluator& ev, const ClassificationTrial& trial, const ChainState& s, std::uint64_t) {
        const double ok = choose_candidate(ev, s, trial.candidates) == trial.truth ? 1.0 : 0.0;
        return std::pair<double, double>{ok, 0.0};
      });
}

DoseResponse generation_dose_response(const ModelConfig& base_config, std::span<const GenerationTrial> trials,
                                      std::span<const std::size_t> levels, std::size_t n_participants,
                                      std::uint64_t seed) {
  ModelConfig config = base_config;
  config.max_symbols = generation_cap(trials, base_config.max_symbols);
  return dose_response<GenerationTrial>(
      config, trials, levels, n_participants, seed,
      [](Evaluator& ev, const GenerationTrial& trial, const ChainState& s, std::uint64_t chain_seed) {
        Rng rng(derive_seed(chain_seed, 0x6f72646572ULL));
        const GenerationScore g = evaluate_generation(greedy_assignment(ev, s, trial.ui, rng), trial);
        return std::pair<double, double>{g.exact_visual_match ? 1.0 : 0.0, g.segment_accuracy};
      });
}

Report simulate_participants(const ModelConfig& config, std::span<const ClassificationTrial> trials,
                             std::size_t n_participants, std::size_t n_steps, std::uint64_t seed) {
  ModelSpec m;
  m.kind = ModelKind::Bpl;
  m.name = "bpl-limited";
  m.n_steps = n_steps;
  m.n_participants = std::max<std::size_t>(1, n_participants);
  return run_classification(config, trials, m, seed);
}

void write_report_tsv(std::ostream& out, const Report& r) {
  out << "task\tmodel\ttrial\taccuracy\tsegment_accuracy\tdecisions\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& t : r.trials) {
    out << r.task << '\t' << r.model << '\t' << t.id << '\t' << t.accuracy << '\t' << t.segment_accuracy << '\t'
        << t.decisions << '\n';
  }
  out << r.task << '\t' << r.model << "\tmean\t" << r.mean_accuracy << '\t' << r.mean_segment_accuracy << '\t'
      << r.trials.size() << '\n';
}

std::string summary_table(std::span<const Report> classification, std::span<const Report> generation) {
  std::vector<std::string> names;
  for (const auto& r : classification) {
    if (std::find(names.begin(), names.end(), r.model) == names.end()) names.push_back(r.model);
  }
  for (const auto& r : generation) {
    if (std::find(names.begin(), names.end(), r.model) == names.end()) names.push_back(r.model);
  }
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %14s %14s\n", "model", "classification", "generation");
  out << line;
  for (const auto& n : names) {
    std::string c = "-", g = "-";
    for (const auto& r : classification) {
      if (r.model == n) {
        std::snprintf(line, sizeof line, "%.1f%%", 100.0 * r.mean_accuracy);
        c = line;
      }
    }
    for (const auto& r : generation) {
      if (r.model == n) {
        std::snprintf(line, sizeof line, "%.1f%%", 100.0 * r.mean_accuracy);
        g = line;
      }
    }
    std::snprintf(line, sizeof line, "%-24s %14s %14s\n", n.c_str(), c.c_str(), g.c_str());
    out << line;
  }
  return out.str();
}

void save_suite(const std::filesystem::path& path, const Suite& suite) {
  namespace fs = std::filesystem;
  const fs::path dir = path.parent_path() / (path.stem().string() + "_images");
  fs::create_directories(dir);
  auto image_ref = [&](const std::string& name, const BinaryImage& img) {
    save_pbm(dir / name, img);
    return (dir.filename() / name).string();
  };
  nlohmann::ordered_json j;
  j["classification"] = nlohmann::json::array();
  for (const auto& t : suite.classification) {
    nlohmann::ordered_json e;
    e["id"] = t.id;
    e["condition"] = to_string(t.condition);
    e["lsystem"] = nlohmann::json::parse(concept_to_json(t.lsystem));
    e["depths"] = t.depths;
    e["observed"] = nlohmann::json::array();
    for (std::size_t k = 0; k < t.observed.size(); ++k) {
      e["observed"].push_back(image_ref(t.id + "_d" + std::to_string(t.depths[k]) + ".pbm", t.observed[k]));
    }
    e["distractor_sources"] = nlohmann::json::array();
    for (const auto& s : t.distractor_sources) e["distractor_sources"].push_back(nlohmann::ordered_json::parse(concept_to_json(s)));
    e["candidates"] = nlohmann::json::array();
    for (std::size_t k = 0; k < t.candidates.size(); ++k) {
      e["candidates"].push_back(image_ref(t.id + "_c" + std::to_string(k) + ".pbm", t.candidates[k]));
    }
    e["truth"] = t.truth;
    j["classification"].push_back(std::move(e));
  }
  j["generation"] = nlohmann::json::array();
  for (const auto& t : suite.generation) {
    nlohmann::ordered_json e;
    e["id"] = t.id;
    e["condition"] = to_string(t.condition);
    e["lsystem"] = nlohmann::json::parse(concept_to_json(t.lsystem));
    e["depths"] = t.depths;
    e["observed"] = nlohmann::json::array();
    for (std::size_t k = 0; k < t.observed.size(); ++k) {
      e["observed"].push_back(image_ref(t.id + "_d" + std::to_string(t.depths[k]) + ".pbm", t.observed[k]));
    }
    e["truth_assignment"] = t.truth_assignment;
    e["truth_image"] = image_ref(t.id + "_truth.pbm", t.truth_image);
    j["generation"].push_back(std::move(e));
  }
  write_file(path, j.dump(1) + "\n");
}

Suite load_suite(const std::filesystem::path& path, const RenderSettings& settings) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("suite: ") + e.what());
  }
  const auto base = path.parent_path();
  auto load_image = [&](const nlohmann::json& ref) {
    BinaryImage img = load_pbm(base / ref.get<std::string>());
    if (!(img.res == settings.res)) throw DimensionMismatch("suite image resolution differs from the configuration");
    return img;
  };
  Suite s;
  try {
    for (const auto& e : j.at("classification")) {
      ClassificationTrial t;
      t.id = e.at("id").get<std::string>();
      t.condition = parse_condition(e.at("condition").get<std::string>());
      t.lsystem = concept_from_json(e.at("lsystem").dump());
      t.depths = e.at("depths").get<std::vector<int>>();
      for (const auto& r : e.at("observed")) t.observed.push_back(load_image(r));
      for (const auto& d : e.at("distractor_sources")) t.distractor_sources.push_back(concept_from_json(d.dump()));
      for (const auto& r : e.at("candidates")) t.candidates.push_back(load_image(r));
      t.truth = e.at("truth").get<std::size_t>();
      if (t.candidates.size() != 6 || t.truth >= 6) throw ParseError("classification trial " + t.id + " is malformed");
      if (t.observed.size() != t.depths.size()) throw ParseError("classification trial " + t.id + " is malformed");
      s.classification.push_back(std::move(t));
    }
    for (const auto& e : j.at("generation")) {
      const LSystem lsystem = concept_from_json(e.at("lsystem").dump());
      GenerationTrial t = build_generation_trial(lsystem, parse_condition(e.at("condition").get<std::string>()),
                                                 settings, std::nullopt);
      t.id = e.at("id").get<std::string>();
      t.depths = e.at("depths").get<std::vector<int>>();
      t.observed.clear();
      for (const auto& r : e.at("observed")) t.observed.push_back(load_image(r));
      if (e.at("truth_assignment").get<std::vector<std::uint8_t>>() != t.truth_assignment) {
        throw ParseError("generation trial " + t.id + " truth does not match its lsystem");
      }
      s.generation.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("suite: ") + e.what());
  }
  return s;
}

}  // namespace rvc
