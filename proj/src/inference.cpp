#include "rvc/inference.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "rvc/error.hpp"

namespace rvc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

InferenceProblem InferenceProblem::known(std::vector<BinaryImage> images, std::vector<int> depths) {
  if (images.size() != depths.size()) throw Error("one depth is needed per image");
  InferenceProblem p;
  p.mode = DepthMode::Known;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (depths[i] < 0) throw Error("negative observation depth");
    p.observations.push_back({std::move(images[i]), depths[i]});
  }
  p.resolution();
  return p;
}

InferenceProblem InferenceProblem::unknown(BinaryImage image) {
  InferenceProblem p;
  p.mode = DepthMode::Unknown;
  p.observations.push_back({std::move(image), 0});
  return p;
}

Resolution InferenceProblem::resolution() const {
  if (observations.empty()) throw Error("inference problem has no observations");
  const Resolution r = observations.front().image.res;
  for (const auto& o : observations) {
    if (!(o.image.res == r) || o.image.pixels.size() != r.pixels()) {
      throw DimensionMismatch("observed images differ in resolution");
    }
  }
  return r;
}

int InferenceProblem::max_depth() const {
  int d = 0;
  for (const auto& o : observations) d = std::max(d, o.depth);
  return d;
}

Evaluator::Evaluator(const ModelConfig& config, const InferenceProblem& problem)
    : config_(config), problem_(problem), raster_(config.render.res) {
  if (!(problem.resolution() == config.render.res)) {
    throw DimensionMismatch("observed images do not match the configured resolution");
  }
  for (const auto& o : problem.observations) n_black_.push_back(o.image.count_black());
}

int Evaluator::legal_depth(const LSystem& l, int depth) const {
  // Track symbol counts instead of building strings.
  const auto counts = [](const SymbolString& s) {
    return std::array<double, 3>{static_cast<double>(s.count_grow()),
                                 static_cast<double>(s.count_inert()),
                                 static_cast<double>(s.length() - s.count_forward())};
  };
  const auto f = counts(l.f_rule);
  const auto g = counts(l.g_rule);
  auto cur = counts(l.axiom);
  const double cap = static_cast<double>(config_.max_symbols);
  int legal = -1;
  for (int d = 0; d <= depth; ++d) {
    if (cur[0] + cur[1] + cur[2] > cap) break;
    legal = d;
    cur = {cur[0] * f[0] + cur[1] * g[0], cur[0] * f[1] + cur[1] * g[1],
           cur[2] + cur[0] * f[2] + cur[1] * g[2]};
  }
  if (legal < 0) throw CapExceeded(l.axiom.length(), config_.max_symbols, 0);
  return legal;
}

double Evaluator::score_uncached(const LSystem& l, int j) {
  double total = 0.0;
  std::vector<SymbolString> strings{l.axiom};
  for (std::size_t k = 0; k < problem_.observations.size(); ++k) {
    const auto& obs = problem_.observations[k];
    const int want = problem_.mode == DepthMode::Known ? obs.depth : j;
    const int d = legal_depth(l, want);
    while (static_cast<int>(strings.size()) <= d) {
      strings.push_back(expand_once(strings.back(), l, config_.max_symbols));
    }
    const InkMap m = render_ink(strings[static_cast<std::size_t>(d)], l.angle_deg, config_.render,
                                raster_, segs_);
    ++renders_;
    total += rvc::log_likelihood(obs.image, m, n_black_[k]);
  }
  return total;
}

double Evaluator::log_likelihood(const LSystem& l, int j) {
  std::string key = l.f_rule.str();
  key += '|';
  key += std::to_string(l.angle_deg);
  key += '|';
  key += std::to_string(problem_.mode == DepthMode::Known ? 0 : j);
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;
  const double v = score_uncached(l, j);
  memo_.emplace(std::move(key), v);
  return v;
}

ChainState Evaluator::make_state(DerivationTree tree, int j) {
  ChainState s;
  s.lsystem = to_lsystem(*config_.grammar, tree);
  s.tree = std::move(tree);
  s.depth = problem_.mode == DepthMode::Known ? 0 : legal_depth(s.lsystem, std::clamp(j, 0, kMaxDepth));
  s.log_prior = derivation_log_prob(*config_.grammar, s.tree);
  if (problem_.mode == DepthMode::Unknown) s.log_prior -= std::log(static_cast<double>(kMaxDepth + 1));
  s.log_likelihood = log_likelihood(s.lsystem, s.depth);
  s.log_posterior = s.log_prior + s.log_likelihood;
  return s;
}

ChainState Evaluator::rescore(const ChainState& s) {
  ChainState r;
  r.tree = s.tree;
  r.lsystem = to_lsystem(*config_.grammar, s.tree);
  r.depth = s.depth;
  r.log_prior = derivation_log_prob(*config_.grammar, s.tree);
  if (problem_.mode == DepthMode::Unknown) r.log_prior -= std::log(static_cast<double>(kMaxDepth + 1));
  r.log_likelihood = score_uncached(r.lsystem, r.depth);
  r.log_posterior = r.log_prior + r.log_likelihood;
  return r;
}

int Evaluator::predictive_depth(const ChainState& s) const {
  const int next = problem_.mode == DepthMode::Known ? problem_.max_depth() + 1 : s.depth + 1;
  return legal_depth(s.lsystem, next);
}

SymbolString Evaluator::predictive_string(const ChainState& s) const {
  return expand_to_depth(s.lsystem, predictive_depth(s), config_.max_symbols);
}

SymbolString Evaluator::mature_string(const ChainState& s) const {
  const int d = problem_.mode == DepthMode::Known ? problem_.max_depth() : s.depth;
  return expand_to_depth(s.lsystem, legal_depth(s.lsystem, d), config_.max_symbols);
}

InkMap Evaluator::predictive(const ChainState& s) {
  ++renders_;
  return render_ink(predictive_string(s), s.lsystem.angle_deg, config_.render, raster_, segs_);
}

ChainState initial_state(Evaluator& ev, Rng& rng) {
  DerivationTree t = sample_derivation(*ev.config().grammar, rng);
  int j = 0;
  if (ev.problem().mode == DepthMode::Unknown) j = static_cast<int>(uniform_index(rng, kMaxDepth + 1));
  return ev.make_state(std::move(t), j);
}

bool mh_step(ChainState& state, Evaluator& ev, Rng& rng) {
  const MetaGrammar& g = *ev.config().grammar;
  const ProposalWeights& w = ev.config().weights;
  const bool depth_moves = ev.problem().mode == DepthMode::Unknown;
  const double total = w.regenerate + w.angle + (depth_moves ? w.depth : 0.0);
  const double u = uniform01(rng) * total;

  ChainState proposal;
  double log_q_ratio = 0.0;  // log q(reverse) - log q(forward)
  if (u < w.regenerate) {
    SubtreeProposal p;
    try {
      p = regenerate_subtree(g, state.tree, rng);
    } catch (const DerivationTooLarge&) {
      return false;
    }
    int j = state.depth;
    if (depth_moves) {
      // The program node also redraws the latent depth.
      if (p.whole_program) j = static_cast<int>(uniform_index(rng, kMaxDepth + 1));
      const double extra = -std::log(static_cast<double>(kMaxDepth + 1));
      p.forward_logq = regeneration_log_q(g, state.tree, p.tree, extra, j == state.depth);
      p.reverse_logq = regeneration_log_q(g, p.tree, state.tree, extra, j == state.depth);
    }
    log_q_ratio = p.reverse_logq - p.forward_logq;
    proposal = ev.make_state(std::move(p.tree), j);
  } else if (u < w.regenerate + w.angle) {
    DerivationTree t = state.tree;
    t.angle_index = uniform_index(rng, g.angles().size());
    proposal = ev.make_state(std::move(t), state.depth);
  } else {
    const int step = uniform01(rng) < 0.5 ? -1 : 1;
    proposal = ev.make_state(state.tree, std::clamp(state.depth + step, 0, kMaxDepth));
  }
  const double log_alpha = proposal.log_posterior - state.log_posterior + log_q_ratio;
  if (log_alpha >= 0.0 || std::log(uniform01(rng)) < log_alpha) {
    state = std::move(proposal);
    return true;
  }
  return false;
}

ChainResult run_chain(Evaluator& ev, const ChainOptions& options) {
  Rng rng(options.seed);
  ChainResult r;
  ChainState state = initial_state(ev, rng);
  r.best = state;
  std::vector<std::size_t> marks = options.checkpoints;
  std::sort(marks.begin(), marks.end());
  std::size_t next_mark = 0;
  auto snapshot = [&](std::size_t step) {
    while (next_mark < marks.size() && marks[next_mark] == step) {
      r.checkpoints.push_back(state);
      ++next_mark;
    }
  };
  snapshot(0);
  if (options.thin > 0) {
    r.trace.push_back({0, state.log_posterior, state.depth, state.lsystem.f_rule.str(),
                       state.lsystem.angle_deg, true});
  }
  for (std::size_t step = 1; step <= options.n_steps; ++step) {
    const bool accepted = mh_step(state, ev, rng);
    if (accepted) {
      ++r.accepted;
      if (state.log_posterior > r.best.log_posterior) r.best = state;
    }
    snapshot(step);
    if (options.thin > 0 && step % options.thin == 0) {
      r.trace.push_back({step, state.log_posterior, state.depth, state.lsystem.f_rule.str(),
                         state.lsystem.angle_deg, accepted});
    }
  }
  while (next_mark < marks.size()) {
    r.checkpoints.push_back(state);
    ++next_mark;
  }
  r.final_state = std::move(state);
  return r;
}

ChainResult run_chain(const ModelConfig& config, const InferenceProblem& problem,
                      std::size_t n_steps, std::uint64_t seed) {
  Evaluator ev(config, problem);
  ChainOptions o;
  o.n_steps = n_steps;
  o.seed = seed;
  return run_chain(ev, o);
}

ChainState best_of_chains(Evaluator& ev, std::size_t n_chains, std::size_t n_steps,
                          std::uint64_t seed) {
  if (n_chains == 0) throw Error("at least one chain is required");
  ChainState best;
  best.log_posterior = kNegInf;
  for (std::size_t c = 0; c < n_chains; ++c) {
    ChainOptions o;
    o.n_steps = n_steps;
    o.seed = derive_seed(seed, c);
    ChainResult r = run_chain(ev, o);
    if (c == 0 || r.best.log_posterior > best.log_posterior) best = std::move(r.best);
  }
  return best;
}

void write_trace_jsonl(std::ostream& out, std::span<const TraceRecord> trace) {
  for (const auto& t : trace) {
    nlohmann::json j{{"step", t.step},       {"log_posterior", t.log_posterior},
                     {"depth", t.depth},     {"f_rule", t.f_rule},
                     {"angle", t.angle_deg}, {"accepted", t.accepted}};
    out << j.dump() << '\n';
  }
}

double posterior_predictive_score(Evaluator& ev, const ChainState& s, const BinaryImage& candidate) {
  const InkMap m = ev.predictive(s);
  return rvc::log_likelihood(candidate, m);
}

std::size_t argmax_lowest(std::span<const double> scores) {
  if (scores.empty()) throw Error("no scores to choose from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::size_t choose_candidate(Evaluator& ev, const ChainState& s,
                             std::span<const BinaryImage> candidates) {
  const InkMap m = ev.predictive(s);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) scores.push_back(rvc::log_likelihood(c, m));
  return argmax_lowest(scores);
}

std::size_t classify(const ModelConfig& config, const InferenceProblem& problem,
                     std::span<const BinaryImage> candidates, std::size_t n_steps,
                     std::uint64_t seed) {
  if (candidates.size() != 6) throw Error("classification needs exactly 6 candidates");
  Evaluator ev(config, problem);
  ChainOptions o;
  o.n_steps = n_steps;
  o.seed = seed;
  const ChainResult r = run_chain(ev, o);
  return choose_candidate(ev, r.final_state, candidates);
}

ToggleInterface::ToggleInterface(SymbolString base, LSystem rules, RenderSettings settings)
    : base_(std::move(base)), rules_(std::move(rules)), settings_(std::move(settings)) {
  for (std::size_t i = 0; i < base_.raw_size(); ++i) {
    if (is_forward(base_[i])) positions_.push_back(i);
  }
}

std::optional<std::vector<std::uint8_t>> ToggleInterface::activation_of(const SymbolString& s) const {
  if (s.raw_size() != base_.raw_size()) return std::nullopt;
  std::vector<std::uint8_t> a;
  a.reserve(positions_.size());
  for (std::size_t i = 0; i < s.raw_size(); ++i) {
    if (is_forward(s[i]) != is_forward(base_[i])) return std::nullopt;
    if (is_forward(s[i])) {
      a.push_back(s[i] == 'F' ? 1 : 0);
    } else if (s[i] != base_[i]) {
      return std::nullopt;
    }
  }
  return a;
}

std::vector<std::uint8_t> ToggleInterface::initial_assignment() const {
  return std::vector<std::uint8_t>(positions_.size(), 0);
}

SymbolString ToggleInterface::apply(std::span<const std::uint8_t> assignment) const {
  if (assignment.size() != positions_.size()) {
    throw DimensionMismatch("assignment has " + std::to_string(assignment.size()) +
                            " entries, interface has " + std::to_string(positions_.size()) +
                            " segments");
  }
  std::string s = base_.str();
  for (std::size_t k = 0; k < positions_.size(); ++k) s[positions_[k]] = assignment[k] ? 'F' : 'G';
  return SymbolString::trusted(std::move(s));
}

SymbolString ToggleInterface::next_string(std::span<const std::uint8_t> assignment) const {
  return expand_once(apply(assignment), rules_, std::numeric_limits<std::size_t>::max());
}

BinaryImage ToggleInterface::next_image(std::span<const std::uint8_t> assignment) const {
  Rasterizer raster(settings_.res);
  std::vector<Segment> scratch;
  return next_image(assignment, raster, scratch);
}

BinaryImage ToggleInterface::next_image(std::span<const std::uint8_t> assignment, Rasterizer& raster,
                                        std::vector<Segment>& scratch) const {
  return render_display(next_string(assignment), rules_.angle_deg, settings_, raster, scratch);
}

std::vector<std::uint8_t> greedy_assignment(Evaluator& ev, const ChainState& s,
                                            const ToggleInterface& ui, Rng& rng, SegmentOrder order,
                                            std::size_t* renders) {
  std::vector<Segment> scratch_segs;
  const SymbolString predicted = ev.predictive_string(s);
  const RenderSettings& settings = ev.config().render;
  const FrameTransform frame = display_frame(predicted, s.lsystem.angle_deg, settings);
  const InkMap predictive = render_ink_in_frame(predicted, s.lsystem.angle_deg, frame, settings, ev.rasterizer(), scratch_segs);
  std::vector<std::size_t> visit(ui.size());
  std::iota(visit.begin(), visit.end(), 0);
  if (order == SegmentOrder::Random) {
    for (std::size_t i = visit.size(); i > 1; --i) std::swap(visit[i - 1], visit[uniform_index(rng, i)]);
  }
  std::vector<std::uint8_t> a = ui.activation_of(ev.mature_string(s)).value_or(ui.initial_assignment());
  std::size_t count = 0;
  auto response = [&] {
    return render_display_in_frame(ui.next_string(a), ui.rules().angle_deg, frame, settings, ev.rasterizer(), scratch_segs);
  };
  for (std::size_t k : visit) {
    a[k] = 0;
    const double off = rvc::log_likelihood(response(), predictive);
    a[k] = 1;
    const double on = rvc::log_likelihood(response(), predictive);
    count += 2;
    a[k] = on > off ? 1 : 0;
  }
  if (renders) *renders = count;
  return a;
}

std::vector<std::uint8_t> generate_via_interface(const ModelConfig& config,
                                                 const InferenceProblem& problem,
                                                 const ToggleInterface& ui, std::size_t n_steps,
                                                 std::uint64_t seed, SegmentOrder order) {
  Evaluator ev(config, problem);
  ChainOptions o;
  o.n_steps = n_steps;
  o.seed = seed;
  const ChainResult r = run_chain(ev, o);
  Rng rng(derive_seed(seed, 0x6f72646572ULL));
  return greedy_assignment(ev, r.final_state, ui, rng, order);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rvc
