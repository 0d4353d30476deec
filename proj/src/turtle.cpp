#include "rvc/turtle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rvc/error.hpp"

namespace rvc {

Vec2 heading_vector(double degrees) {
  double d = std::fmod(degrees, 360.0);
  if (d < 0) d += 360.0;
  if (d == 0.0) return {1.0, 0.0};
  if (d == 90.0) return {0.0, 1.0};
  if (d == 180.0) return {-1.0, 0.0};
  if (d == 270.0) return {0.0, -1.0};
  const double r = d * std::numbers::pi / 180.0;
  return {std::cos(r), std::sin(r)};
}

void trace_from_origin(std::string_view s, double angle_deg, TurnConvention turns,
                       std::vector<Segment>& out) {
  out.clear();
  const int left = turns == TurnConvention::MinusIsLeft ? 1 : -1;
  long heading_steps = 0;
  long cached_steps = 0;
  Vec2 dir{1.0, 0.0};
  Vec2 pos{};
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == 'F' || c == 'G') {
      if (heading_steps != cached_steps) {
        dir = heading_vector(static_cast<double>(heading_steps) * angle_deg);
        cached_steps = heading_steps;
      }
      const Vec2 next{pos.x + dir.x, pos.y + dir.y};
      out.push_back({pos, next, i});
      pos = next;
    } else if (c == '-') {
      heading_steps += left;
    } else if (c == '+') {
      heading_steps -= left;
    }
  }
}

BoundingBox bounding_box(const std::vector<Segment>& segments) {
  if (segments.empty()) return {};
  BoundingBox b{segments[0].start.x, segments[0].start.y, segments[0].start.x,
                segments[0].start.y};
  for (const auto& seg : segments) {
    for (const Vec2& p : {seg.start, seg.end}) {
      b.min_x = std::min(b.min_x, p.x);
      b.max_x = std::max(b.max_x, p.x);
      b.min_y = std::min(b.min_y, p.y);
      b.max_y = std::max(b.max_y, p.y);
    }
  }
  return b;
}

TurtleTrajectory trace(const SymbolString& s, double angle_deg, TurnConvention turns) {
  TurtleTrajectory t;
  trace_from_origin(s.view(), angle_deg, turns, t.segments);
  const BoundingBox b = bounding_box(t.segments);
  for (auto& seg : t.segments) {
    seg.start.x -= b.min_x;
    seg.start.y -= b.min_y;
    seg.end.x -= b.min_x;
    seg.end.y -= b.min_y;
  }
  t.start_position = {-b.min_x, -b.min_y};
  return t;
}

FrameTransform normalizing_transform(const std::vector<Segment>& segments, double common_width) {
  if (segments.empty()) throw EmptyTrajectory("cannot normalize an empty trajectory");
  const BoundingBox b = bounding_box(segments);
  const double w = b.width();
  const double h = b.height();
  const double extent = std::max(w, h);
  const double scale = w > 1e-9 * extent ? common_width / w : common_width / h;
  return {scale, 0.5 - 0.5 * (b.min_x + b.max_x) * scale, 0.5 - 0.5 * (b.min_y + b.max_y) * scale};
}

void apply_transform(std::vector<Segment>& segments, const FrameTransform& f) {
  for (auto& seg : segments) {
    seg.start = f.apply(seg.start);
    seg.end = f.apply(seg.end);
  }
}

void normalize_in_place(std::vector<Segment>& segments, double common_width) {
  apply_transform(segments, normalizing_transform(segments, common_width));
}

TurtleTrajectory normalize(const TurtleTrajectory& t, double common_width) {
  TurtleTrajectory out = t;
  const FrameTransform f = normalizing_transform(t.segments, common_width);
  apply_transform(out.segments, f);
  out.start_position = f.apply(t.start_position);
  return out;
}

namespace {

double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

int orientation(Vec2 o, Vec2 a, Vec2 b, double tol) {
  const double c = cross(o, a, b);
  if (c > tol) return 1;
  if (c < -tol) return -1;
  return 0;
}

bool on_segment(Vec2 p, Vec2 a, Vec2 b, double tol) {
  return std::min(a.x, b.x) - tol <= p.x && p.x <= std::max(a.x, b.x) + tol &&
         std::min(a.y, b.y) - tol <= p.y && p.y <= std::max(a.y, b.y) + tol;
}

}  // namespace

bool segments_intersect(const Segment& s1, const Segment& s2, double tol) {
  const Vec2 p1 = s1.start, q1 = s1.end, p2 = s2.start, q2 = s2.end;
  const int o1 = orientation(p1, q1, p2, tol);
  const int o2 = orientation(p1, q1, q2, tol);
  const int o3 = orientation(p2, q2, p1, tol);
  const int o4 = orientation(p2, q2, q1, tol);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  if (o1 == 0 && on_segment(p2, p1, q1, tol)) return true;
  if (o2 == 0 && on_segment(q2, p1, q1, tol)) return true;
  if (o3 == 0 && on_segment(p1, p2, q2, tol)) return true;
  return o4 == 0 && on_segment(q1, p2, q2, tol);
}

bool self_intersects(const std::vector<Segment>& segs, double tol) {
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    // Consecutive segments share an endpoint; they only conflict when folding back.
    const Vec2 a{segs[i].end.x - segs[i].start.x, segs[i].end.y - segs[i].start.y};
    const Vec2 b{segs[i + 1].end.x - segs[i + 1].start.x, segs[i + 1].end.y - segs[i + 1].start.y};
    if (a.x * b.x + a.y * b.y < -1.0 + tol && std::abs(a.x * b.y - a.y * b.x) < tol) return true;
    for (std::size_t j = i + 2; j < segs.size(); ++j) {
      if (segments_intersect(segs[i], segs[j], tol)) return true;
    }
  }
  return false;
}

const char* ConstraintReport::first_failure() const {
  if (!has_growth) return "has-growth";
  if (!no_adjacent_forwards) return "no-adjacent-forwards";
  if (!shape_preserving) return "shape-preservation";
  if (!upward_growth) return "upward-growth";
  if (!non_self_crossing) return "non-self-crossing";
  return "";
}

bool is_shape_preserving(const LSystem& l, TurnConvention turns) {
  long net = 0;
  for (char c : l.f_rule) {
    if (c == '-') net += 1;
    if (c == '+') net -= 1;
  }
  double rotation = std::fmod(std::abs(static_cast<double>(net) * l.angle_deg), 360.0);
  if (rotation > 1e-9 && rotation < 360.0 - 1e-9) return false;
  std::vector<Segment> segs;
  trace_from_origin(l.f_rule.view(), l.angle_deg, turns, segs);
  if (segs.empty()) return false;
  const Vec2 end = segs.back().end;
  return end.x > 1e-9 && std::abs(end.y) < 1e-9;
}

ConstraintReport validate_stimulus_constraints(const LSystem& l, TurnConvention turns) {
  ConstraintReport r;
  r.has_growth = l.f_rule.count_grow() > 0;
  r.no_adjacent_forwards = true;
  char prev = 0;
  for (char c : l.f_rule) {
    if (c == ' ') continue;
    if (is_forward(c) && is_forward(prev)) r.no_adjacent_forwards = false;
    prev = c;
  }
  r.shape_preserving = is_shape_preserving(l, turns);

  const SymbolString s2 = expand_to_depth(l, 2, static_cast<std::size_t>(-1));
  std::vector<Segment> segs;
  trace_from_origin(s2.view(), l.angle_deg, turns, segs);
  if (!segs.empty()) {
    const BoundingBox b = bounding_box(segs);
    r.upward_growth = b.max_y > 1e-9 && b.min_y > -1e-9;
    r.non_self_crossing = !self_intersects(segs);
  }
  return r;
}

}  // namespace rvc
