#pragma once

#include <cstddef>
#include <vector>

#include "rvc/lsystem.hpp"

namespace rvc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Which turn symbol rotates counterclockwise (y grows upward).
enum class TurnConvention {
  MinusIsLeft,
  PlusIsLeft,
};

inline constexpr TurnConvention kDefaultTurns = TurnConvention::MinusIsLeft;

struct Segment {
  Vec2 start;
  Vec2 end;
  std::size_t source_index = 0;  ///< position of the forward symbol in the traced string
};

struct TurtleTrajectory {
  std::vector<Segment> segments;
  Vec2 start_position;
  double start_heading_deg = 0.0;
};

struct BoundingBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
};

/// Counterclockwise unit vector for an angle in degrees; exact at multiples of 90.
Vec2 heading_vector(double degrees);

/// Traces `s` with unit steps from the origin heading right, without translation.
void trace_from_origin(std::string_view s, double angle_deg, TurnConvention turns,
                       std::vector<Segment>& out);

/// Turtle trajectory of `s`, translated so the bottom-left corner of its
/// bounding box is the origin.
TurtleTrajectory trace(const SymbolString& s, double angle_deg,
                       TurnConvention turns = kDefaultTurns);

BoundingBox bounding_box(const std::vector<Segment>& segments);

/// Default fraction of the frame spanned by a normalized trajectory.
inline constexpr double kCommonWidth = 0.9;

/// Uniform scale followed by a translation: p -> p * scale + offset.
struct FrameTransform {
  double scale = 1.0;
  double offset_x = 0.0;
  double offset_y = 0.0;
  Vec2 apply(Vec2 p) const { return {p.x * scale + offset_x, p.y * scale + offset_y}; }
};

/// The map taking `segments` to width `common_width`, centered in the unit
/// frame. Zero-width trajectories are scaled to that height instead.
/// Throws EmptyTrajectory.
FrameTransform normalizing_transform(const std::vector<Segment>& segments, double common_width = kCommonWidth);
void apply_transform(std::vector<Segment>& segments, const FrameTransform& f);

/// Uniformly rescales to width `common_width` and centers in the unit frame.
TurtleTrajectory normalize(const TurtleTrajectory& t, double common_width = kCommonWidth);
void normalize_in_place(std::vector<Segment>& segments, double common_width = kCommonWidth);


/// Closed-segment intersection test with an absolute tolerance.
bool segments_intersect(const Segment& a, const Segment& b, double tol = 1e-9);

/// True when some pair of non-consecutive segments touches, or two
/// consecutive segments fold back over each other.
bool self_intersects(const std::vector<Segment>& segments, double tol = 1e-9);

struct ConstraintReport {
  bool upward_growth = false;
  bool non_self_crossing = false;
  bool no_adjacent_forwards = false;
  bool shape_preserving = false;
  bool has_growth = false;  ///< f_rule contains at least one F

  bool all_pass() const {
    return upward_growth && non_self_crossing && no_adjacent_forwards && shape_preserving &&
           has_growth;
  }
  /// Name of the first failing constraint, or empty.
  const char* first_failure() const;
};

/// Net rotation zero and net displacement along +x when tracing the F-rule.
bool is_shape_preserving(const LSystem& l, TurnConvention turns = kDefaultTurns);

ConstraintReport validate_stimulus_constraints(const LSystem& l,
                                               TurnConvention turns = kDefaultTurns);

}  // namespace rvc
