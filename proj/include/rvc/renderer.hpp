#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rvc/image.hpp"
#include "rvc/random.hpp"
#include "rvc/turtle.hpp"

namespace rvc {

/// Pen used to draw stimulus images shown to observers. A pixel is black when
/// its center lies closer than half the pen width to some segment.
struct DisplayPen {
  double width_px = 2.0;
};

/// Everything needed to turn a symbol string into images.
struct RenderSettings {
  Resolution res{};
  InkParams ink{};
  DisplayPen pen{};
  double common_width = kCommonWidth;
  TurnConvention turns = kDefaultTurns;
};

/// Reusable scratch buffers for rasterization. Not thread-safe; use one per thread.
class Rasterizer {
 public:
  explicit Rasterizer(Resolution res = {});

  Resolution resolution() const { return res_; }

  /// Sparse ink-model image of an already normalized trajectory.
  InkMap render(std::span<const Segment> normalized, const InkParams& params);

  /// Unblurred, unclamped ink deposits (pixel index, amount). Used by the ink fitter.
  void deposit(std::span<const Segment> normalized, double ink_per_px,
               std::vector<std::uint32_t>& index, std::vector<double>& amount);

  /// Blurs, clamps and remaps sparse deposits into an InkMap.
  InkMap finish(std::span<const std::uint32_t> index, std::span<const double> amount,
                const InkParams& params);

  /// Display-pen drawing of an already normalized trajectory.
  BinaryImage draw(std::span<const Segment> normalized, const DisplayPen& pen);

 private:
  Resolution res_;
  std::vector<double> ink_;
  std::vector<double> tmp_;
  std::vector<std::uint8_t> mark_ink_;
  std::vector<std::uint8_t> mark_tmp_;
  std::vector<std::uint32_t> touched_;
  std::vector<std::uint32_t> touched_tmp_;
  std::vector<std::uint32_t> touched_out_;
  std::vector<std::uint32_t> scratch_index_;
  std::vector<double> scratch_amount_;
};

/// Dense ink-model mean image of a normalized trajectory.
MeanImage rasterize(const TurtleTrajectory& normalized, const InkParams& params,
                    Resolution res = {});

/// Stimulus image of a normalized trajectory.
BinaryImage draw_binary(const TurtleTrajectory& normalized, Resolution res = {},
                        DisplayPen pen = {});

/// Traces, normalizes and rasterizes; strings without forward symbols give the
/// uniform epsilon image.
InkMap render_ink(const SymbolString& s, double angle_deg, const RenderSettings& settings,
                  Rasterizer& raster, std::vector<Segment>& scratch);
MeanImage render_mean(const SymbolString& s, double angle_deg, const RenderSettings& settings);

/// Traces, normalizes and draws with the display pen; empty strings give a white image.
BinaryImage render_display(const SymbolString& s, double angle_deg, const RenderSettings& settings,
                           Rasterizer& raster, std::vector<Segment>& scratch);
BinaryImage render_display(const SymbolString& s, double angle_deg, const RenderSettings& settings);

/// The normalizing transform of `s` traced from the origin.
FrameTransform display_frame(const SymbolString& s, double angle_deg, const RenderSettings& settings);
/// Traces `s` from the origin and maps it with `frame` instead of normalizing it.
InkMap render_ink_in_frame(const SymbolString& s, double angle_deg, const FrameTransform& frame,
                           const RenderSettings& settings, Rasterizer& raster,
                           std::vector<Segment>& scratch);
BinaryImage render_display_in_frame(const SymbolString& s, double angle_deg, const FrameTransform& frame,
                                    const RenderSettings& settings, Rasterizer& raster,
                                    std::vector<Segment>& scratch);

/// Independent Bernoulli draw per pixel.
BinaryImage sample_image(const MeanImage& m, Rng& rng);
BinaryImage sample_image(const MeanImage& m, std::uint64_t seed);

BinaryImage threshold(const MeanImage& m, double level = 0.5);

/// Sum over pixels of log m (black) or log(1 - m) (white). Throws DimensionMismatch.
double log_likelihood(const BinaryImage& image, const MeanImage& mean);
/// Same quantity from the sparse form; `n_black` must be image.count_black().
double log_likelihood(const BinaryImage& image, const InkMap& mean, std::size_t n_black);
double log_likelihood(const BinaryImage& image, const InkMap& mean);

}  // namespace rvc
