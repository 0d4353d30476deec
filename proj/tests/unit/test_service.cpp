#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <thread>

#include "rvc/http.hpp"
#include "rvc/image_io.hpp"
#include "rvc/service.hpp"

using namespace rvc;
using nlohmann::json;

namespace {

RunConfig small_config() {
  return parse_run_config(R"({"resolution": 64, "seed": 3,
    "steps": {"generate_incremental": 200, "generate_block": 200}})");
}

std::vector<GenerationTrial> small_trials(const RunConfig& c) {
  const RenderSettings s = c.model().render;
  GenerationTrial a = build_generation_trial(LSystem{"F", 60.0, "G-G+F+G-G", "G"}, Condition::Incremental, s, std::nullopt);
  GenerationTrial b = build_generation_trial(LSystem{"F", 90.0, "G-F+F+F-G", "G"}, Condition::Block, s, std::nullopt);
  a.id = "inc-g00";
  b.id = "blk-g00";
  return {std::move(a), std::move(b)};
}

std::string assignment_body(const std::vector<std::uint8_t>& a, const std::string& session = {}) {
  json j;
  j["assignment"] = a;
  if (!session.empty()) j["session"] = session;
  return j.dump();
}

}  // namespace

TEST_CASE("trial listing and geometry") {
  const RunConfig c = small_config();
  Service svc(c, small_trials(c));
  const json list = json::parse(svc.handle("GET", "/v1/trials", {}, "").body);
  REQUIRE(list["trials"].size() == 2);
  CHECK(list["trials"][0]["id"] == "inc-g00");
  CHECK(list["trials"][1]["condition"] == "block");

  for (const GenerationTrial& t : svc.trials()) {
    const HttpReply r = svc.handle("GET", "/v1/trials/" + t.id, {}, "");
    REQUIRE(r.status == 200);
    const json j = json::parse(r.body);
    REQUIRE(j["segments"].size() == t.ui.size());
    for (std::size_t k = 0; k < t.ui.size(); ++k) {
      CHECK(j["segments"][k]["id"] == t.ui.positions()[k]);
      CHECK(j["segments"][k]["state"] == 0);
    }
    REQUIRE(j["observed"].size() == t.observed.size());
    for (std::size_t i = 0; i < t.observed.size(); ++i) {
      CHECK(j["observed"][i]["image"] == base64_encode(encode_pbm(t.observed[i])));
    }
  }
}

TEST_CASE("responses are scored like evaluate_generation") {
  const RunConfig c = small_config();
  Service svc(c, small_trials(c));
  const GenerationTrial& t = svc.trials()[0];
  std::string session;
  for (int variant = 0; variant < 3; ++variant) {
    std::vector<std::uint8_t> a = t.truth_assignment;
    if (variant == 1) a = t.ui.initial_assignment();
    if (variant == 2) a.assign(a.size(), 1);
    const HttpReply r = svc.handle("POST", "/v1/trials/" + t.id + "/responses", {}, assignment_body(a, session));
    REQUIRE(r.status == 200);
    const json j = json::parse(r.body);
    const GenerationScore want = evaluate_generation(a, t);
    CHECK(j["segment_accuracy"].get<double>() == want.segment_accuracy);
    CHECK(j["exact_match"].get<bool>() == want.exact_visual_match);
    CHECK(j["image"] == base64_encode(encode_pbm(t.ui.next_image(a))));
    if (session.empty()) session = j["session"];
    CHECK(j["session"] == session);
  }
  const json log = json::parse(svc.handle("GET", "/v1/sessions/" + session, {}, "").body);
  REQUIRE(log["responses"].size() == 3);
  CHECK(log["responses"][0]["exact_match"] == true);
  CHECK(log["responses"][1]["exact_match"] == false);
}

TEST_CASE("request errors") {
  const RunConfig c = small_config();
  Service svc(c, small_trials(c));
  const std::string path = "/v1/trials/inc-g00/responses";
  const std::size_t m = svc.trials()[0].ui.size();
  CHECK(svc.handle("POST", path, {}, "{").status == 400);
  CHECK(svc.handle("POST", path, {}, R"({"assign": []})").status == 400);
  CHECK(svc.handle("POST", path, {}, assignment_body(std::vector<std::uint8_t>(m + 1))).status == 400);
  CHECK(svc.handle("POST", path, {}, json{{"assignment", std::vector<int>(m, 2)}}.dump()).status == 400);
  CHECK(svc.handle("POST", path, {}, assignment_body(std::vector<std::uint8_t>(m), "nope")).status == 404);
  CHECK(svc.handle("POST", "/v1/trials/zzz/responses", {}, assignment_body({})).status == 404);
  CHECK(svc.handle("GET", "/v1/trials/zzz", {}, "").status == 404);
  CHECK(svc.handle("GET", "/v1/sessions/nope", {}, "").status == 404);
  CHECK(svc.handle("GET", "/v2/trials", {}, "").status == 404);
  CHECK(svc.handle("DELETE", "/v1/trials", {}, "").status == 405);
  CHECK(svc.handle("GET", path, {}, "").status == 405);
  CHECK(svc.handle("GET", "/v1/trials/inc-g00/prediction", {{"seed", "x1"}}, "").status == 400);
}

TEST_CASE("predictions are deterministic and equal generate_via_interface") {
  const RunConfig c = small_config();
  Service svc(c, small_trials(c));
  const GenerationTrial& t = svc.trials()[1];
  const HttpReply a = svc.handle("GET", "/v1/trials/blk-g00/prediction", {{"seed", "12"}}, "");
  const HttpReply b = svc.handle("GET", "/v1/trials/blk-g00/prediction", {{"seed", "12"}}, "");
  REQUIRE(a.status == 200);
  CHECK(a.body == b.body);
  const json j = json::parse(a.body);
  const InferenceProblem p = t.problem();
  const auto want = generate_via_interface(svc.model(), p, t.ui, 200, 12);
  CHECK(j["assignment"].get<std::vector<std::uint8_t>>() == want);
  CHECK(j["steps"] == 200);
}

TEST_CASE("HTTP round trip") {
  const RunConfig c = small_config();
  Service svc(c, small_trials(c));
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread th([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  auto list = client.Get("/v1/trials");
  REQUIRE(list);
  CHECK(list->status == 200);
  CHECK(list->body == svc.list_trials().body);
  const auto a = svc.trials()[0].truth_assignment;
  auto post = client.Post("/v1/trials/inc-g00/responses", assignment_body(a), "application/json");
  REQUIRE(post);
  CHECK(post->status == 200);
  CHECK(json::parse(post->body)["exact_match"] == true);
  auto missing = client.Get("/v1/trials/none");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto pred = client.Get("/v1/trials/inc-g00/prediction?seed=4");
  REQUIRE(pred);
  CHECK(pred->body == svc.handle("GET", "/v1/trials/inc-g00/prediction", {{"seed", "4"}}, "").body);
  server.stop();
  th.join();
}
