#include "rvc/service.hpp"

#include <charconv>
#include <cstdio>
#include <json.hpp>

#include "rvc/error.hpp"
#include "rvc/image_io.hpp"

namespace rvc {

namespace {

using nlohmann::ordered_json;

HttpReply reply(int status, const ordered_json& body) { return {status, body.dump(), "application/json"}; }

HttpReply error_reply(int status, const std::string& message) {
  ordered_json j;
  j["error"] = message;
  return reply(status, j);
}

std::string image_b64(const BinaryImage& img) { return base64_encode(encode_pbm(img)); }

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    const auto slash = path.find('/');
    std::string_view head = path.substr(0, slash);
    if (!head.empty()) parts.push_back(head);
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  return parts;
}

}  // namespace

Service::Service(RunConfig config, std::vector<GenerationTrial> trials)
    : config_(std::move(config)), trials_(std::move(trials)) {
  model_ = config_.model();
  model_.max_symbols = generation_cap(trials_, model_.max_symbols);
}

const GenerationTrial* Service::find(std::string_view id) const {
  for (const auto& t : trials_) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

HttpReply Service::list_trials() const {
  ordered_json list = ordered_json::array();
  for (const auto& t : trials_) {
    ordered_json e;
    e["id"] = t.id;
    e["condition"] = to_string(t.condition);
    e["segments"] = t.ui.size();
    list.push_back(std::move(e));
  }
  ordered_json j;
  j["trials"] = std::move(list);
  return reply(200, j);
}

HttpReply Service::get_trial(std::string_view id) const {
  const GenerationTrial* t = find(id);
  if (!t) return error_reply(404, "unknown trial '" + std::string(id) + "'");
  const RenderSettings& settings = t->ui.settings();
  const TurtleTrajectory traj =
      normalize(trace(t->ui.base(), t->lsystem.angle_deg, settings.turns), settings.common_width);
  const std::vector<std::uint8_t> initial = t->ui.initial_assignment();
  ordered_json segs = ordered_json::array();
  for (std::size_t k = 0; k < traj.segments.size(); ++k) {
    const Segment& s = traj.segments[k];
    ordered_json e;
    e["id"] = s.source_index;
    e["x0"] = s.start.x;
    e["y0"] = s.start.y;
    e["x1"] = s.end.x;
    e["y1"] = s.end.y;
    e["state"] = initial[k];
    segs.push_back(std::move(e));
  }
  ordered_json observed = ordered_json::array();
  for (std::size_t i = 0; i < t->observed.size(); ++i) {
    ordered_json e;
    e["depth"] = t->depths[i];
    e["image"] = image_b64(t->observed[i]);
    observed.push_back(std::move(e));
  }
  ordered_json j;
  j["id"] = t->id;
  j["condition"] = to_string(t->condition);
  j["resolution"] = {settings.res.width, settings.res.height};
  j["segments"] = std::move(segs);
  j["observed"] = std::move(observed);
  return reply(200, j);
}

HttpReply Service::post_response(std::string_view id, std::string_view body) {
  const GenerationTrial* t = find(id);
  if (!t) return error_reply(404, "unknown trial '" + std::string(id) + "'");
  std::vector<std::uint8_t> assignment;
  std::string token;
  try {
    const auto j = nlohmann::json::parse(body);
    for (const auto& v : j.at("assignment")) {
      const int bit = v.is_boolean() ? static_cast<int>(v.get<bool>()) : v.get<int>();
      if (bit != 0 && bit != 1) return error_reply(400, "assignment entries must be 0 or 1");
      assignment.push_back(static_cast<std::uint8_t>(bit));
    }
    if (j.contains("session")) token = j.at("session").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    return error_reply(400, std::string("malformed body: ") + e.what());
  }
  if (assignment.size() != t->ui.size()) {
    return error_reply(400, "assignment has " + std::to_string(assignment.size()) + " entries, trial has " +
                                std::to_string(t->ui.size()) + " segments");
  }
  const GenerationScore score = evaluate_generation(assignment, *t);
  const BinaryImage image = t->ui.next_image(assignment);
  {
    std::lock_guard<std::mutex> lock(sessions_mutex_);
    if (token.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%016llx",
                    static_cast<unsigned long long>(derive_seed(config_.seed, 0x73657373ULL, next_session_++)));
      token = buf;
    } else if (!sessions_.count(token)) {
      return error_reply(404, "unknown session '" + token + "'");
    }
    sessions_[token].push_back({t->id, assignment, score});
  }
  ordered_json j;
  j["trial"] = t->id;
  j["session"] = token;
  j["segment_accuracy"] = score.segment_accuracy;
  j["exact_match"] = score.exact_visual_match;
  j["image"] = image_b64(image);
  return reply(200, j);
}

std::vector<std::uint8_t> Service::predict(const GenerationTrial& trial, std::uint64_t seed) const {
  const InferenceProblem problem = trial.problem();
  return generate_via_interface(model_, problem, trial.ui, config_.generate_steps(trial.condition), seed);
}

HttpReply Service::get_prediction(std::string_view id, const QueryParams& query) const {
  const GenerationTrial* t = find(id);
  if (!t) return error_reply(404, "unknown trial '" + std::string(id) + "'");
  std::uint64_t seed = config_.seed;
  if (auto it = query.find("seed"); it != query.end()) {
    const std::string& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || ptr != s.data() + s.size()) return error_reply(400, "seed must be an unsigned integer");
  }
  const std::vector<std::uint8_t> a = predict(*t, seed);
  const GenerationScore score = evaluate_generation(a, *t);
  ordered_json j;
  j["trial"] = t->id;
  j["seed"] = seed;
  j["steps"] = config_.generate_steps(t->condition);
  j["assignment"] = a;
  j["segment_accuracy"] = score.segment_accuracy;
  j["exact_match"] = score.exact_visual_match;
  j["image"] = image_b64(t->ui.next_image(a));
  return reply(200, j);
}

HttpReply Service::get_session(std::string_view token) const {
  std::lock_guard<std::mutex> lock(sessions_mutex_);
  const auto it = sessions_.find(std::string(token));
  if (it == sessions_.end()) return error_reply(404, "unknown session '" + std::string(token) + "'");
  ordered_json list = ordered_json::array();
  for (const auto& r : it->second) {
    ordered_json e;
    e["trial"] = r.trial;
    e["assignment"] = r.assignment;
    e["segment_accuracy"] = r.score.segment_accuracy;
    e["exact_match"] = r.score.exact_visual_match;
    list.push_back(std::move(e));
  }
  ordered_json j;
  j["session"] = it->first;
  j["responses"] = std::move(list);
  return reply(200, j);
}

HttpReply Service::handle(std::string_view method, std::string_view path, const QueryParams& query,
                          std::string_view body) {
  const auto p = split_path(path);
  if (p.size() < 2 || p[0] != "v1") return error_reply(404, "no such endpoint");
  const bool get = method == "GET", post = method == "POST";
  try {
    if (p[1] == "trials") {
      if (p.size() == 2) return get ? list_trials() : error_reply(405, "method not allowed");
      if (p.size() == 3) return get ? get_trial(p[2]) : error_reply(405, "method not allowed");
      if (p.size() == 4 && p[3] == "responses") {
        return post ? post_response(p[2], body) : error_reply(405, "method not allowed");
      }
      if (p.size() == 4 && p[3] == "prediction") {
        return get ? get_prediction(p[2], query) : error_reply(405, "method not allowed");
      }
    }
    if (p[1] == "sessions" && p.size() == 3) return get ? get_session(p[2]) : error_reply(405, "method not allowed");
  } catch (const Error& e) {
    return error_reply(500, e.what());
  }
  return error_reply(404, "no such endpoint");
}

std::vector<GenerationTrial> service_trials(const RunConfig& config) {
  std::vector<GenerationTrial> out;
  for (Condition c : {Condition::Incremental, Condition::Block}) {
    Suite s = build_suite(config.model(), c, config.suite);
    for (auto& t : s.generation) {
      t.id = std::string(c == Condition::Incremental ? "inc-" : "blk-") + t.id;
      out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace rvc
