#include <doctest.h>

#include <cmath>
#include <random>

#include "rvc/error.hpp"
#include "rvc/renderer.hpp"

using namespace rvc;

namespace {

// Dense reference: bilinear deposits at 2 samples per pixel, 2-D blur, clamp, remap.
std::vector<double> reference_mean(const std::vector<Segment>& segs, const InkParams& p, Resolution res) {
  const int W = res.width, H = res.height;
  std::vector<double> ink(res.pixels(), 0.0);
  for (const Segment& s : segs) {
    const double x0 = s.start.x * W, y0 = (1 - s.start.y) * H, x1 = s.end.x * W, y1 = (1 - s.end.y) * H;
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int n = std::max(1, static_cast<int>(std::ceil(2 * len)));
    for (int i = 0; i < n; ++i) {
      const double t = (i + 0.5) / n;
      const double u = x0 + t * (x1 - x0), v = y0 + t * (y1 - y0);
      for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
          const double wx = std::max(0.0, 1 - std::abs(u - (c + 0.5)));
          const double wy = std::max(0.0, 1 - std::abs(v - (r + 0.5)));
          ink[r * W + c] += p.ink_per_px * len / n * wx * wy;
        }
      }
    }
  }
  const int R = static_cast<int>(p.blur.size() / 2);
  std::vector<double> out(res.pixels(), 0.0);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      double acc = 0;
      for (int dr = -R; dr <= R; ++dr) {
        for (int dc = -R; dc <= R; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= H || cc >= W) continue;
          acc += ink[rr * W + cc] * p.blur[dr + R] * p.blur[dc + R];
        }
      }
      out[r * W + c] = p.epsilon + (1 - 2 * p.epsilon) * std::clamp(acc, 0.0, 1.0);
    }
  }
  return out;
}

BinaryImage reference_pen(const std::vector<Segment>& segs, double width, Resolution res) {
  BinaryImage img(res);
  for (int r = 0; r < res.height; ++r) {
    for (int c = 0; c < res.width; ++c) {
      const double px = c + 0.5, py = r + 0.5;
      for (const Segment& s : segs) {
        const double x0 = s.start.x * res.width, y0 = (1 - s.start.y) * res.height;
        const double x1 = s.end.x * res.width, y1 = (1 - s.end.y) * res.height;
        const double dx = x1 - x0, dy = y1 - y0, l2 = dx * dx + dy * dy;
        const double t = l2 > 0 ? std::clamp(((px - x0) * dx + (py - y0) * dy) / l2, 0.0, 1.0) : 0.0;
        if (std::hypot(x0 + t * dx - px, y0 + t * dy - py) < width / 2) img.at(c, r) = 1;
      }
    }
  }
  return img;
}

MeanImage constant_mean(Resolution res, double v) {
  MeanImage m;
  m.res = res;
  m.prob.assign(res.pixels(), v);
  return m;
}

}  // namespace

TEST_CASE("sparse rasterizer equals the dense reference") {
  const Resolution res{24, 24};
  for (const char* s : {"F", "G-G+F+G-G", "F-F++F-F", "F+G+F-G-F", "G-F++F-G"}) {
    for (double sigma : {0.0, 0.6, 1.1}) {
      const InkParams p = make_ink_params(0.7, sigma, 1e-3);
      const TurtleTrajectory t = normalize(trace(s, 60.0));
      const MeanImage got = rasterize(t, p, res);
      const auto want = reference_mean(t.segments, p, res);
      for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got.prob[i] - want[i]) < 1e-12);
    }
  }
}

TEST_CASE("bilinear deposit closed form on an 8x8 grid") {
  const Resolution res{8, 8};
  const InkParams p = make_ink_params(1.0, 0.0, 1e-4);
  const double y = 1.0 - 3.5 / 8.0;
  TurtleTrajectory t;
  t.segments.push_back({{0.5 / 8, y}, {7.5 / 8, y}, 0});
  const MeanImage m = rasterize(t, p, res);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      double want = p.epsilon;
      if (r == 3) want = (c == 0 || c == 7) ? 0.5 : 1.0 - p.epsilon;
      CHECK(m.at(c, r) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("display pen equals brute-force distance test") {
  const Resolution res{40, 40};
  RenderSettings settings;
  settings.res = res;
  Rasterizer raster(res);
  for (const char* s : {"F", "G-G+F+G-G", "F-F++F-F-F+F", "G+F-G-F+G"}) {
    for (double w : {1.0, 2.0, 3.0}) {
      const TurtleTrajectory t = normalize(trace(s, 45.0));
      CHECK(raster.draw(t.segments, {w}) == reference_pen(t.segments, w, res));
    }
  }
}

TEST_CASE("empty strings") {
  RenderSettings settings;
  settings.res = {10, 10};
  Rasterizer raster(settings.res);
  std::vector<Segment> scratch;
  CHECK(render_display("++-", 60.0, settings, raster, scratch).count_black() == 0);
  const MeanImage m = render_mean("", 60.0, settings);
  for (double v : m.prob) CHECK(v == settings.ink.epsilon);
}

TEST_CASE("rendering is deterministic") {
  RenderSettings settings;
  settings.res = {64, 64};
  const MeanImage a = render_mean("G-G+F+G-G", 60.0, settings);
  const MeanImage b = render_mean("G-G+F+G-G", 60.0, settings);
  CHECK(a.prob == b.prob);
}

TEST_CASE("rendering is stable across resolutions") {
  const LSystem l{"F", 60.0, "G-G+F+G-G", "G"};
  RenderSettings lo, hi;
  lo.res = {100, 100};
  hi.res = {200, 200};
  for (int d = 1; d <= 3; ++d) {
    const SymbolString s = expand_to_depth(l, d);
    const MeanImage a = render_mean(s, l.angle_deg, lo);
    const MeanImage b = render_mean(s, l.angle_deg, hi);
    double err = 0;
    for (int r = 0; r < 100; ++r) {
      for (int c = 0; c < 100; ++c) {
        const double down = (b.at(2 * c, 2 * r) + b.at(2 * c + 1, 2 * r) + b.at(2 * c, 2 * r + 1) +
                             b.at(2 * c + 1, 2 * r + 1)) / 4;
        err += std::abs(down - a.at(c, r));
      }
    }
    CHECK(err / 10000 < 0.05);
  }
}

TEST_CASE("drawing in the string's own frame equals normalized drawing") {
  RenderSettings settings;
  settings.res = {60, 60};
  Rasterizer raster(settings.res);
  std::vector<Segment> scratch;
  for (const char* s : {"F", "G-G+F+G-G", "F-F++F-F"}) {
    const FrameTransform f = display_frame(s, 60.0, settings);
    CHECK(render_display_in_frame(s, 60.0, f, settings, raster, scratch) ==
          render_display(s, 60.0, settings, raster, scratch));
    const InkMap a = render_ink_in_frame(s, 60.0, f, settings, raster, scratch);
    const InkMap b = render_ink(s, 60.0, settings, raster, scratch);
    CHECK(a.to_dense(settings.ink).prob == b.to_dense(settings.ink).prob);
  }
}

TEST_CASE("sample_image: determinism and Bernoulli mean") {
  const MeanImage m = constant_mean({100, 100}, 0.3);
  const BinaryImage a = sample_image(m, 42);
  CHECK(a == sample_image(m, 42));
  CHECK(std::abs(static_cast<double>(a.count_black()) / 10000.0 - 0.3) < 0.01 * 3);
  std::size_t black = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) black += sample_image(m, 1000 + seed).count_black();
  CHECK(std::abs(static_cast<double>(black) / 100000.0 - 0.3) < 0.01);
  CHECK(sample_image(constant_mean({50, 50}, 1e-12), 3).count_black() == 0);
}

TEST_CASE("log_likelihood closed forms") {
  MeanImage half = constant_mean({1, 1}, 0.5);
  BinaryImage black({1, 1});
  black.pixels[0] = 1;
  CHECK(log_likelihood(black, half) == doctest::Approx(std::log(0.5)));

  const double eps = 1e-4;
  const MeanImage low = constant_mean({7, 9}, eps);
  CHECK(log_likelihood(BinaryImage({7, 9}), low) == doctest::Approx(63 * std::log1p(-eps)));
  CHECK_THROWS_AS(log_likelihood(BinaryImage({7, 8}), low), DimensionMismatch);
}

TEST_CASE("sparse and dense likelihoods agree") {
  RenderSettings settings;
  settings.res = {50, 50};
  settings.ink = make_ink_params(1.5, 0.7, 0.01);
  Rasterizer raster(settings.res);
  std::vector<Segment> scratch;
  std::mt19937_64 rng(9);
  for (const char* s : {"F", "G-G+F+G-G", "F-F++F-F"}) {
    const InkMap sparse = render_ink(s, 60.0, settings, raster, scratch);
    const MeanImage dense = sparse.to_dense(settings.ink);
    for (int k = 0; k < 5; ++k) {
      const BinaryImage img = sample_image(dense, rng);
      CHECK(log_likelihood(img, sparse) == doctest::Approx(log_likelihood(img, dense)).epsilon(1e-12));
    }
  }
}

TEST_CASE("thresholding at 0.5 maximizes the likelihood over all 3x3 images") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 20; ++trial) {
    MeanImage m = constant_mean({3, 3}, 0.5);
    for (double& v : m.prob) v = u(rng);
    const double best = log_likelihood(threshold(m), m);
    for (int bits = 0; bits < 512; ++bits) {
      BinaryImage img({3, 3});
      for (int i = 0; i < 9; ++i) img.pixels[i] = (bits >> i) & 1;
      CHECK(log_likelihood(img, m) <= best + 1e-12);
    }
  }
}

TEST_CASE("images score higher under their own mean than a mismatched one") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  int wins = 0;
  for (int k = 0; k < 100; ++k) {
    MeanImage m = constant_mean({20, 20}, 0.5), other = m;
    for (double& v : m.prob) v = u(rng);
    for (double& v : other.prob) v = u(rng);
    double own = 0, mismatched = 0;
    for (int s = 0; s < 20; ++s) {
      const BinaryImage img = sample_image(m, rng);
      own += log_likelihood(img, m);
      mismatched += log_likelihood(img, other);
    }
    wins += own > mismatched;
  }
  CHECK(wins == 100);
}

TEST_CASE("ink parameter validation") {
  CHECK_NOTHROW(check_ink_params(make_ink_params(2.0, 0.5, 1e-4)));
  CHECK_THROWS_AS(check_ink_params(make_ink_params(2.0, 0.5, 0.0)), Error);
  CHECK_THROWS_AS(check_ink_params(make_ink_params(2.0, 0.5, 0.6)), Error);
  InkParams bad;
  bad.blur = {0.5, 0.5};
  CHECK_THROWS_AS(check_ink_params(bad), Error);
}
