#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "rvc/error.hpp"
#include "rvc/turtle.hpp"

using namespace rvc;

namespace {

using C = std::complex<double>;

// Position and heading as complex numbers; a left turn multiplies by e^{i a}.
std::vector<std::pair<C, C>> complex_turtle(const std::string& s, double angle_deg, bool minus_is_left) {
  const C turn = std::polar(1.0, angle_deg * std::numbers::pi / 180.0);
  C pos = 0.0, dir = 1.0;
  std::vector<std::pair<C, C>> out;
  for (char c : s) {
    if (c == 'F' || c == 'G') {
      out.push_back({pos, pos + dir});
      pos += dir;
    } else if (c == '-') {
      dir = minus_is_left ? dir * turn : dir / turn;
    } else if (c == '+') {
      dir = minus_is_left ? dir / turn : dir * turn;
    }
  }
  return out;
}

std::string random_string(std::mt19937& rng, int n) {
  static const char alphabet[] = {'F', 'G', '+', '-', ' ', '+', '-'};
  std::uniform_int_distribution<int> pick(0, 6);
  std::string s;
  for (int i = 0; i < n; ++i) s += alphabet[pick(rng)];
  return s;
}

}  // namespace

TEST_CASE("trace agrees with a complex-number turtle") {
  std::mt19937 rng(7);
  for (int i = 0; i < 200; ++i) {
    const std::string s = random_string(rng, 40);
    const double angle = std::vector<double>{30, 45, 60, 72, 90, 120}[i % 6];
    for (bool minus_left : {true, false}) {
      std::vector<Segment> segs;
      trace_from_origin(s, angle, minus_left ? TurnConvention::MinusIsLeft : TurnConvention::PlusIsLeft, segs);
      const auto want = complex_turtle(s, angle, minus_left);
      REQUIRE(segs.size() == want.size());
      for (std::size_t k = 0; k < segs.size(); ++k) {
        CHECK(std::abs(segs[k].start.x - want[k].first.real()) < 1e-9);
        CHECK(std::abs(segs[k].start.y - want[k].first.imag()) < 1e-9);
        CHECK(std::abs(segs[k].end.x - want[k].second.real()) < 1e-9);
        CHECK(std::abs(segs[k].end.y - want[k].second.imag()) < 1e-9);
        CHECK(is_forward(s[segs[k].source_index]));
      }
    }
  }
}

TEST_CASE("segment count equals forward-symbol count") {
  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    const SymbolString s(random_string(rng, 60));
    CHECK(trace(s, 60.0).segments.size() == s.count_forward());
  }
}

TEST_CASE("single step and a left turn") {
  const TurtleTrajectory t = trace("F", 60.0);
  REQUIRE(t.segments.size() == 1);
  CHECK(t.segments[0].start == Vec2{0, 0});
  CHECK(t.segments[0].end == Vec2{1, 0});

  const TurtleTrajectory u = trace("F+F", 90.0, TurnConvention::PlusIsLeft);
  REQUIRE(u.segments.size() == 2);
  CHECK(u.segments[0].start == Vec2{0, 0});
  CHECK(u.segments[0].end == Vec2{1, 0});
  CHECK(u.segments[1].start == Vec2{1, 0});
  CHECK(u.segments[1].end == Vec2{1, 1});
}

TEST_CASE("sprout path ends on the x axis") {
  const TurtleTrajectory t = trace("G-G+F+G-G", 60.0);
  REQUIRE(t.segments.size() == 5);
  const Vec2 start = t.segments.front().start, end = t.segments.back().end;
  CHECK(std::abs(end.y - start.y) < 1e-12);
  CHECK(end.x - start.x > 0.0);
}

TEST_CASE("trace translates the bounding box to the origin") {
  const TurtleTrajectory t = trace("F+F+F", 90.0);
  const BoundingBox b = bounding_box(t.segments);
  CHECK(std::abs(b.min_x) < 1e-12);
  CHECK(std::abs(b.min_y) < 1e-12);
}

TEST_CASE("normalize: width, centering, idempotence and scale invariance") {
  const TurtleTrajectory t = trace("G-G+F+G-G+F-F", 60.0);
  const TurtleTrajectory n = normalize(t);
  const BoundingBox b = bounding_box(n.segments);
  CHECK(b.width() == doctest::Approx(kCommonWidth));
  CHECK((b.min_x + b.max_x) / 2 == doctest::Approx(0.5));
  CHECK((b.min_y + b.max_y) / 2 == doctest::Approx(0.5));

  const TurtleTrajectory nn = normalize(n);
  TurtleTrajectory scaled = t;
  for (auto& s : scaled.segments) {
    s.start = {s.start.x * 3.7 + 11.0, s.start.y * 3.7 - 2.0};
    s.end = {s.end.x * 3.7 + 11.0, s.end.y * 3.7 - 2.0};
  }
  const TurtleTrajectory ns = normalize(scaled);
  for (std::size_t k = 0; k < n.segments.size(); ++k) {
    CHECK(std::abs(nn.segments[k].start.x - n.segments[k].start.x) < 1e-12);
    CHECK(std::abs(nn.segments[k].end.y - n.segments[k].end.y) < 1e-12);
    CHECK(std::abs(ns.segments[k].start.x - n.segments[k].start.x) < 1e-12);
    CHECK(std::abs(ns.segments[k].end.y - n.segments[k].end.y) < 1e-12);
  }
}

TEST_CASE("zero-width trajectories scale by height") {
  std::vector<Segment> v{{{0, 0}, {0, 2}, 0}};
  normalize_in_place(v);
  CHECK(std::abs(v[0].start.x - 0.5) < 1e-12);
  CHECK(std::abs(v[0].end.y - v[0].start.y) == doctest::Approx(kCommonWidth));
  CHECK(std::abs(v[0].start.y - 0.05) < 1e-12);
}

TEST_CASE("empty trajectories cannot be normalized") {
  CHECK_THROWS_AS(normalize(TurtleTrajectory{}), EmptyTrajectory);
}

TEST_CASE("segment intersection agrees with exact integer parametrics") {
  // a0 + t da = b0 + u db, solved by Cramer's rule on lattice endpoints.
  auto exact_hit = [](long ax, long ay, long bx, long by, long cx, long cy, long dx, long dy) {
    const long dax = bx - ax, day = by - ay, dbx = dx - cx, dby = dy - cy;
    const long det = dax * (-dby) - day * (-dbx);
    const long rx = cx - ax, ry = cy - ay;
    if (det != 0) {
      long tn = rx * (-dby) - ry * (-dbx), un = dax * ry - day * rx, d = det;
      if (d < 0) {
        d = -d;
        tn = -tn;
        un = -un;
      }
      return 0 <= tn && tn <= d && 0 <= un && un <= d;
    }
    if (dax * ry - day * rx != 0) return false;
    const long len = dax * dax + day * day;
    const long p0 = rx * dax + ry * day, p1 = (dx - ax) * dax + (dy - ay) * day;
    return std::max(std::min(p0, p1), 0L) <= std::min(std::max(p0, p1), len);
  };
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> coord(0, 4);
  int hits = 0, n = 0;
  while (n < 2000) {
    long v[8];
    for (auto& x : v) x = coord(rng);
    if ((v[0] == v[2] && v[1] == v[3]) || (v[4] == v[6] && v[5] == v[7])) continue;
    ++n;
    const Segment a{{double(v[0]), double(v[1])}, {double(v[2]), double(v[3])}, 0};
    const Segment b{{double(v[4]), double(v[5])}, {double(v[6]), double(v[7])}, 0};
    const bool want = exact_hit(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]);
    CHECK(segments_intersect(a, b) == want);
    hits += want;
  }
  CHECK(hits > 100);
}

TEST_CASE("stimulus constraints") {
  const ConstraintReport ok = validate_stimulus_constraints(LSystem{"F", 60.0, "G-G+F+G-G", "G"});
  CHECK(ok.all_pass());
  CHECK(std::string(ok.first_failure()).empty());

  const ConstraintReport ff = validate_stimulus_constraints(LSystem{"F", 60.0, "FF", "G"});
  CHECK_FALSE(ff.no_adjacent_forwards);

  const LSystem retrace{"F", 90.0, "F++F", "G"};
  std::vector<Segment> segs;
  trace_from_origin(expand_to_depth(retrace, 2).view(), 90.0, kDefaultTurns, segs);
  CHECK(self_intersects(segs));
  CHECK_FALSE(validate_stimulus_constraints(retrace).non_self_crossing);

  CHECK_FALSE(validate_stimulus_constraints(LSystem{"F", 60.0, "G-G", "G"}).shape_preserving);
  CHECK_FALSE(validate_stimulus_constraints(LSystem{"F", 60.0, "G-G+G+G-G", "G"}).has_growth);
  CHECK_FALSE(validate_stimulus_constraints(LSystem{"F", 60.0, "G+G-F-G+G", "G"}).upward_growth);
}
