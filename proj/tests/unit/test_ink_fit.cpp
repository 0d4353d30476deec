#include <doctest.h>

#include <cmath>

#include "rvc/error.hpp"
#include "rvc/ink_fit.hpp"

using namespace rvc;

TEST_CASE("maximize_scalar agrees with a fine grid") {
  const auto f = [](double x) { return -std::pow(x - 1.37, 2) + 0.3 * std::sin(5 * x); };
  double best_x = 0, best = -INFINITY;
  for (int i = 0; i <= 400000; ++i) {
    const double x = -2.0 + 6.0 * i / 400000;
    if (f(x) > best) {
      best = f(x);
      best_x = x;
    }
  }
  const double got = maximize_scalar(f, -2.0, 4.0);
  CHECK(std::abs(got - best_x) < 1e-4);
  CHECK(maximize_scalar([](double x) { return x; }, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fit recovers ink parameters from images drawn by the ink model") {
  const Resolution res{60, 60};
  const InkParams truth = make_ink_params(1.2, 0.7, 0.02);
  std::vector<ScribblePair> corpus;
  std::uint64_t seed = 100;
  for (const TurtleTrajectory& t : random_scribbles(80, 5)) {
    corpus.push_back({t, sample_image(rasterize(t, truth, res), seed++)});
  }
  const InkFitResult fit = fit_ink_params(corpus, res);
  CHECK(std::abs(fit.params.ink_per_px / truth.ink_per_px - 1) < 0.1);
  CHECK(std::abs(fit.params.blur_sigma / truth.blur_sigma - 1) < 0.1);
  CHECK(std::abs(fit.params.epsilon / truth.epsilon - 1) < 0.1);
  CHECK(fit.log_likelihood >= corpus_log_likelihood(corpus, truth, res));
  CHECK(fit.log_likelihood == doctest::Approx(corpus_log_likelihood(corpus, fit.params, res)));
}

TEST_CASE("fit needs enough scribbles") {
  RenderSettings s;
  s.res = {40, 40};
  const auto corpus = display_scribble_corpus(kMinScribbles - 1, 1, s);
  CHECK_THROWS_AS(fit_ink_params(corpus, s.res), InsufficientData);
}

TEST_CASE("scribbles are normalized and reproducible") {
  const auto a = random_scribbles(20, 9), b = random_scribbles(20, 9);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].segments.size() == b[i].segments.size());
    CHECK(a[i].segments.front().start == b[i].segments.front().start);
    const BoundingBox box = bounding_box(a[i].segments);
    CHECK((box.width() > 1e-9 ? box.width() : box.height()) == doctest::Approx(kCommonWidth));
  }
}
