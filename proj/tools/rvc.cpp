#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "rvc/concept_io.hpp"
#include "rvc/config.hpp"
#include "rvc/error.hpp"
#include "rvc/http.hpp"
#include "rvc/image_io.hpp"
#include "rvc/ink_fit.hpp"

using namespace rvc;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  RunConfig load() const {
    RunConfig c = config_path.empty() ? default_run_config() : load_run_config(config_path);
    if (seed) c.seed = *seed;
    return c;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("-c,--config", common.config_path, "run configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", common.seed, "overrides the configured seed");
}

std::string padded(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

Suite suite_for(const RunConfig& config, Condition condition, const std::string& suite_path) {
  if (!suite_path.empty()) return load_suite(suite_path, config.model().render);
  SuiteOptions o = config.suite;
  return build_suite(config.model(), condition, o);
}

std::vector<std::size_t> parse_levels(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');) out.push_back(std::stoul(tok));
  if (out.empty()) throw Error("no chain lengths given");
  return out;
}

int cmd_sample(const Common& common, std::size_t n, const std::string& out_dir) {
  const RunConfig config = common.load();
  const ModelConfig model = config.model();
  const std::vector<LSystem> concepts = sample_concepts(model, n, config.seed);
  fs::create_directories(out_dir);
  const std::vector<int> depths = {0, 1, 2, 3, 4};
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    const fs::path stem = fs::path(out_dir) / ("concept_" + padded(i));
    save_concept(stem.string() + ".json", concepts[i]);
    const auto images = render_steps(concepts[i], depths, model.render);
    for (std::size_t d = 0; d < images.size(); ++d) {
      save_pbm(stem.string() + "_d" + std::to_string(depths[d]) + ".pbm", images[d]);
    }
    std::cout << stem.filename().string() << '\t' << concept_to_json(concepts[i]) << '\n';
  }
  return 0;
}

int cmd_render(const Common& common, const std::string& concept_path, const std::vector<int>& depths,
               const std::string& prefix, bool mean) {
  const RunConfig config = common.load();
  const RenderSettings settings = config.model().render;
  const LSystem l = load_concept(concept_path);
  for (int d : depths) {
    const SymbolString s = expand_to_depth(l, d, std::numeric_limits<std::size_t>::max());
    const std::string stem = prefix + "_d" + std::to_string(d);
    save_pbm(stem + ".pbm", render_display(s, l.angle_deg, settings));
    if (mean) save_pgm(stem + ".pgm", render_mean(s, l.angle_deg, settings));
    std::cout << stem << ".pbm\t" << s.length() << " symbols\n";
  }
  return 0;
}

int cmd_infer(const Common& common, const std::vector<std::string>& images, std::vector<int> depths,
              const std::string& mode, std::size_t steps, std::optional<std::size_t> chains,
              const std::string& out, const std::string& trace_path) {
  const RunConfig config = common.load();
  const ModelConfig model = config.model();
  std::vector<BinaryImage> observed;
  for (const auto& p : images) observed.push_back(load_pbm(p));
  InferenceProblem problem;
  if (mode == "unknown") {
    if (observed.size() != 1) throw Error("unknown-depth inference takes exactly one image");
    problem = InferenceProblem::unknown(observed[0]);
  } else {
    if (depths.empty()) {
      for (std::size_t i = 0; i < observed.size(); ++i) depths.push_back(static_cast<int>(i));
    }
    if (depths.size() != observed.size()) throw Error("one depth per image is required");
    problem = InferenceProblem::known(observed, depths);
  }
  if (!(problem.resolution() == model.render.res)) {
    throw DimensionMismatch("image resolution differs from the configured resolution");
  }
  Evaluator ev(model, problem);
  const std::size_t n_chains = chains.value_or(config.chains);
  ChainResult best;
  for (std::size_t c = 0; c < n_chains; ++c) {
    ChainOptions o;
    o.n_steps = steps;
    o.seed = derive_seed(config.seed, c);
    o.thin = trace_path.empty() ? 0 : 1;
    ChainResult r = run_chain(ev, o);
    if (c == 0 || r.best.log_posterior > best.best.log_posterior) best = std::move(r);
  }
  const ChainState& s = best.best;
  if (!out.empty()) save_concept(out, s.lsystem);
  if (!trace_path.empty()) {
    std::ofstream f(trace_path);
    if (!f) throw Error("cannot write " + trace_path);
    write_trace_jsonl(f, best.trace);
  }
  nlohmann::ordered_json j;
  j["concept"] = nlohmann::ordered_json::parse(concept_to_json(s.lsystem));
  if (problem.mode == DepthMode::Unknown) j["depth"] = s.depth;
  j["log_posterior"] = s.log_posterior;
  j["log_prior"] = s.log_prior;
  j["log_likelihood"] = s.log_likelihood;
  j["accepted"] = best.accepted;
  std::cout << j.dump(1) << '\n';
  return 0;
}

struct ExperimentArgs {
  std::string task = "classify";
  std::string condition = "incremental";
  std::vector<std::string> models{"bpl"};
  std::string steps;
  std::optional<std::size_t> participants;
  std::optional<std::size_t> chains;
  std::string suite_path;
  std::string embeddings;
  std::string report;
};

int cmd_experiment(const Common& common, const ExperimentArgs& a) {
  const RunConfig config = common.load();
  const Condition condition = parse_condition(a.condition);
  if (a.task != "classify" && a.task != "generate") throw Error("task must be classify or generate");
  const bool classify = a.task == "classify";
  std::vector<ModelSpec> specs;
  for (const auto& name : a.models) {
    ModelSpec m = parse_model(name, a.embeddings.empty() ? std::nullopt : std::optional<fs::path>(a.embeddings));
    if (m.kind == ModelKind::Bpl) {
      m.n_participants = a.participants.value_or(0);
      if (a.steps.empty() || a.steps == "large") {
        m.n_steps = m.n_participants == 0 ? config.steps.ideal
                    : classify             ? config.classify_steps(condition)
                                           : config.generate_steps(condition);
      } else {
        m.n_steps = std::stoul(a.steps);
      }
      m.n_chains = a.chains.value_or(config.chains);
      if (m.n_participants > 0) m.name = "bpl-limited";
    } else if (m.kind == ModelKind::Random && a.participants) {
      m.n_participants = *a.participants;
    }
    specs.push_back(std::move(m));
  }
  const Suite suite = suite_for(config, condition, a.suite_path);
  const ModelConfig model = config.model();
  std::vector<Report> reports;
  for (const auto& m : specs) {
    reports.push_back(classify ? run_classification(model, suite.classification, m, config.seed)
                               : run_generation(model, suite.generation, m, config.seed));
  }
  std::ostringstream tsv;
  for (const auto& r : reports) write_report_tsv(tsv, r);
  if (!a.report.empty()) write_file(a.report, tsv.str());
  const std::span<const Report> none;
  std::cout << (classify ? summary_table(reports, none) : summary_table(none, reports));
  return 0;
}

int cmd_suite(const Common& common, const std::string& condition, const std::string& out) {
  const RunConfig config = common.load();
  const Suite suite = suite_for(config, parse_condition(condition), "");
  save_suite(out, suite);
  std::cout << suite.classification.size() << " classification trials, " << suite.generation.size()
            << " generation trials\n";
  return 0;
}

int cmd_dose(const Common& common, const std::string& task, const std::string& condition,
             const std::string& levels_text, std::optional<std::size_t> participants, const std::string& suite_path) {
  const RunConfig config = common.load();
  const Condition c = parse_condition(condition);
  const std::vector<std::size_t> levels = parse_levels(levels_text);
  const Suite suite = suite_for(config, c, suite_path);
  const std::size_t n = participants.value_or(config.participants);
  DoseResponse d;
  if (task == "classify") {
    d = classification_dose_response(config.model(), suite.classification, levels, n, config.seed);
  } else if (task == "generate") {
    d = generation_dose_response(config.model(), suite.generation, levels, n, config.seed);
  } else {
    throw Error("task must be classify or generate");
  }
  std::printf("steps\taccuracy\tsegment_accuracy\n");
  for (std::size_t i = 0; i < d.levels.size(); ++i) {
    std::printf("%zu\t%.6f\t%.6f\n", d.levels[i], d.accuracy[i],
                i < d.segment_accuracy.size() ? d.segment_accuracy[i] : 0.0);
  }
  return 0;
}

int cmd_fit_ink(const Common& common, std::size_t n, const std::string& out) {
  const RunConfig config = common.load();
  const RenderSettings settings = config.model().render;
  const std::uint64_t seed = common.seed.value_or(7);
  const auto corpus = display_scribble_corpus(n, seed, settings);
  const InkFitResult r = fit_ink_params(corpus, settings.res);
  write_text(out, ink_params_to_json(r.params, r.log_likelihood) + "\n");
  return 0;
}

int cmd_serve(const Common& common, const std::string& host, int port, const std::string& suite_path) {
  RunConfig config = common.load();
  std::vector<GenerationTrial> trials;
  if (suite_path.empty()) {
    trials = service_trials(config);
  } else {
    trials = load_suite(suite_path, config.model().render).generation;
  }
  Service service(std::move(config), std::move(trials));
  HttpServer server(service);
  const int bound = server.bind(host, port);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  std::cout << "listening on http://" << host << ':' << bound << "/v1/trials" << std::endl;
  return server.listen() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive visual concepts: sampling, rendering, inference and experiments"};
  app.require_subcommand(1);
  Common common;
  int status = 0;

  auto* sample = app.add_subcommand("sample", "sample stimulus concepts and render depths 0-4");
  add_common(sample, common);
  std::size_t n_sample = 1;
  std::string sample_out = "concepts";
  sample->add_option("-n,--count", n_sample, "number of concepts")->check(CLI::PositiveNumber);
  sample->add_option("-o,--out", sample_out, "output directory");

  auto* render = app.add_subcommand("render", "render a concept file at the given depths");
  add_common(render, common);
  std::string concept_path, render_prefix;
  std::vector<int> render_depths{0, 1, 2, 3, 4};
  bool render_mean_flag = false;
  render->add_option("concept", concept_path, "concept file")->required()->check(CLI::ExistingFile);
  render->add_option("-d,--depth", render_depths, "depths to render")->check(CLI::Range(0, 8));
  render->add_option("-o,--prefix", render_prefix, "output prefix (default: concept path stem)");
  render->add_flag("--mean", render_mean_flag, "also write the ink-model mean image (P5)");

  auto* infer = app.add_subcommand("infer", "posterior inference from observed images");
  add_common(infer, common);
  std::vector<std::string> infer_images;
  std::vector<int> infer_depths;
  std::string infer_mode = "known", infer_out, infer_trace;
  std::size_t infer_steps = 20000;
  std::optional<std::size_t> infer_chains;
  infer->add_option("images", infer_images, "observed P4 images")->required()->check(CLI::ExistingFile);
  infer->add_option("-d,--depth", infer_depths, "depth of each image (known mode; default 0,1,...)");
  infer->add_option("--mode", infer_mode, "known or unknown depth")->check(CLI::IsMember({"known", "unknown"}));
  infer->add_option("--steps", infer_steps, "steps per chain")->check(CLI::PositiveNumber);
  infer->add_option("--chains", infer_chains, "independent chains");
  infer->add_option("-o,--out", infer_out, "MAP concept file");
  infer->add_option("--trace", infer_trace, "JSONL trace of the winning chain");

  auto* experiment = app.add_subcommand("experiment", "run models on a classification or generation suite");
  add_common(experiment, common);
  ExperimentArgs ex;
  experiment->add_option("task", ex.task, "classify or generate")->check(CLI::IsMember({"classify", "generate"}));
  experiment->add_option("--condition", ex.condition, "incremental or block");
  experiment->add_option("-m,--model", ex.models,
                         "bpl, nonrecursive, euclidean, hausdorff, random, external (repeatable)");
  experiment->add_option("--steps", ex.steps, "chain length, or 'large' for the ideal observer");
  experiment->add_option("--participants", ex.participants, "simulated participants (limited chains)");
  experiment->add_option("--chains", ex.chains, "chains for the ideal observer");
  experiment->add_option("--suite", ex.suite_path, "suite file (default: regenerate)");
  experiment->add_option("--embeddings", ex.embeddings, "embedding file for the external model");
  experiment->add_option("--report", ex.report, "per-trial TSV report");

  auto* suite = app.add_subcommand("suite", "regenerate and save a task suite");
  add_common(suite, common);
  std::string suite_condition = "incremental", suite_out = "suite.json";
  suite->add_option("--condition", suite_condition, "incremental or block");
  suite->add_option("-o,--out", suite_out, "suite file");

  auto* dose = app.add_subcommand("dose", "accuracy of limited chains at several chain lengths");
  add_common(dose, common);
  std::string dose_task = "classify", dose_condition = "incremental", dose_levels = "1,30,240,2000,20000",
              dose_suite;
  std::optional<std::size_t> dose_participants;
  dose->add_option("task", dose_task, "classify or generate")->check(CLI::IsMember({"classify", "generate"}));
  dose->add_option("--condition", dose_condition, "incremental or block");
  dose->add_option("--levels", dose_levels, "comma-separated chain lengths");
  dose->add_option("--participants", dose_participants, "simulated participants per trial");
  dose->add_option("--suite", dose_suite, "suite file (default: regenerate)");

  auto* fit = app.add_subcommand("fit-ink", "fit ink parameters to display-pen scribbles");
  add_common(fit, common);
  std::size_t fit_n = 60;
  std::string fit_out = "-";
  fit->add_option("-n,--count", fit_n, "number of scribbles");
  fit->add_option("-o,--out", fit_out, "ink parameter file ('-' for stdout)");

  auto* serve = app.add_subcommand("serve", "HTTP service for the generation interface");
  add_common(serve, common);
  std::string host = "127.0.0.1", serve_suite;
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--suite", serve_suite, "suite file (default: both conditions regenerated)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) status = cmd_sample(common, n_sample, sample_out);
    if (*render) {
      if (render_prefix.empty()) render_prefix = (fs::path(concept_path).parent_path() / fs::path(concept_path).stem()).string();
      status = cmd_render(common, concept_path, render_depths, render_prefix, render_mean_flag);
    }
    if (*infer) {
      status = cmd_infer(common, infer_images, infer_depths, infer_mode, infer_steps, infer_chains, infer_out,
                         infer_trace);
    }
    if (*experiment) status = cmd_experiment(common, ex);
    if (*suite) status = cmd_suite(common, suite_condition, suite_out);
    if (*dose) status = cmd_dose(common, dose_task, dose_condition, dose_levels, dose_participants, dose_suite);
    if (*fit) status = cmd_fit_ink(common, fit_n, fit_out);
    if (*serve) status = cmd_serve(common, host, port, serve_suite);
  } catch (const Error& e) {
    std::cerr << "rvc: " << e.what() << '\n';
    return 1;
  }
  return status;
}
