#include <doctest.h>

#include <filesystem>

#include "rvc/config.hpp"
#include "rvc/error.hpp"
#include "rvc/image_io.hpp"

using namespace rvc;

TEST_CASE("defaults use the builtin grammar and shipped ink") {
  const RunConfig c = default_run_config();
  CHECK(c.resolution == 200);
  CHECK(c.grammar->to_text() == MetaGrammar::builtin().to_text());
  CHECK(c.ink == fitted_ink_params());
  CHECK(c.model().render.res == Resolution{200, 200});
  CHECK(c.classify_steps(Condition::Block) == 240);
  CHECK(c.generate_steps(Condition::Block) == 80);
}

TEST_CASE("fields are parsed") {
  const RunConfig c = parse_run_config(R"({"resolution": 64, "angles": [45, 90], "seed": 9,
    "steps": {"generate_incremental": 10, "ideal": 500},
    "suite": {"generation_trials": 3, "min_segments": 5, "max_segments": 40}})");
  CHECK(c.resolution == 64);
  CHECK(c.grammar->angles() == std::vector<double>{45, 90});
  CHECK(c.seed == 9);
  CHECK(c.steps.generate_incremental == 10);
  CHECK(c.steps.ideal == 500);
  CHECK(c.steps.classify_incremental == 240);
  CHECK(c.suite.generation_trials == 3);
  CHECK(c.suite.segments.min == 5);
  CHECK(c.suite.segments.max == 40);
}

TEST_CASE("unknown keys and malformed values are rejected") {
  CHECK_THROWS_AS(parse_run_config(R"({"resolutoin": 64})"), ParseError);
  CHECK_THROWS_AS(parse_run_config(R"({"steps": {"classify": 3}})"), ParseError);
  CHECK_THROWS_AS(parse_run_config(R"({"suite": {"trials": 3}})"), ParseError);
  CHECK_THROWS_AS(parse_run_config(R"({"resolution": "big"})"), ParseError);
  CHECK_THROWS_AS(parse_run_config("{"), ParseError);
  CHECK_THROWS_AS(parse_run_config(R"({"resolution": 4})"), Error);
  CHECK_THROWS_AS(parse_run_config(R"({"angles": []})"), Error);
  CHECK_THROWS_AS(parse_run_config(R"({"suite": {"min_segments": 50, "max_segments": 40}})"), Error);
}

TEST_CASE("relative paths resolve against the config file") {
  const auto dir = std::filesystem::temp_directory_path() / "rvc_config_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir / "sub");
  write_file(dir / "sub" / "g.grammar", "angles: 72\nStart -> \"F\" | \"G-F-G\"\n");
  write_file(dir / "sub" / "ink.json", R"({"ink_per_px": 3.0, "blur_sigma": 0.5, "epsilon": 0.001})");
  write_file(dir / "run.json", R"({"grammar": "sub/g.grammar", "ink": "sub/ink.json"})");
  const RunConfig c = load_run_config(dir / "run.json");
  CHECK(c.grammar->angles() == std::vector<double>{72});
  CHECK(c.ink == make_ink_params(3.0, 0.5, 0.001));
  write_file(dir / "bad.json", R"({"grammar": "sub/missing.grammar"})");
  CHECK_THROWS_AS(load_run_config(dir / "bad.json"), Error);
  CHECK_THROWS_AS(load_run_config(dir / "absent.json"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ink parameter files round trip") {
  const InkParams p = make_ink_params(14.25, 0.3, 2e-6);
  CHECK(ink_params_from_json(ink_params_to_json(p)) == p);
  CHECK(ink_params_to_json(p, -5.0).find("\"log_likelihood\":-5.0") != std::string::npos);
  CHECK_THROWS_AS(ink_params_from_json(R"({"blur_sigma": 1})"), ParseError);
}

TEST_CASE("with_angles replaces or adds the angle line") {
  const std::string g = "angles: 30 60\nStart -> \"F\"\n";
  CHECK(with_angles(g, {90}) == "angles: 90\nStart -> \"F\"\n");
  CHECK(MetaGrammar::parse(with_angles("Start -> \"F\"\n", {45, 90})).angles() == std::vector<double>{45, 90});
}
