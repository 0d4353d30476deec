#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rvc {

struct Resolution {
  int width = 200;
  int height = 200;
  std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

/// Ink-model parameters. The blur stencil is separable and applied on both axes.
struct InkParams {
  double ink_per_px = 2.0;  ///< ink deposited per pixel of arc length
  std::vector<double> blur{0.25, 0.5, 0.25};
  double epsilon = 1e-4;
  double blur_sigma = 0.0;  ///< width the stencil was built from; informational

  friend bool operator==(const InkParams&, const InkParams&) = default;
};

/// Normalized Gaussian stencil; sigma == 0 gives the identity stencil.
std::vector<double> gaussian_stencil(double sigma);
InkParams make_ink_params(double ink_per_px, double blur_sigma, double epsilon);
/// Throws Error when epsilon is outside (0, 0.5) or the stencil is invalid.
void check_ink_params(const InkParams& p);

/// Observed black/white image; 1 = black.
struct BinaryImage {
  Resolution res;
  std::vector<std::uint8_t> pixels;

  BinaryImage() = default;
  explicit BinaryImage(Resolution r) : res(r), pixels(r.pixels(), 0) {}
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * res.width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * res.width + x]; }
  std::size_t count_black() const;
  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

/// Per-pixel black probabilities, each in [epsilon, 1 - epsilon].
struct MeanImage {
  Resolution res;
  std::vector<double> prob;
  InkParams params;

  double at(int x, int y) const { return prob[static_cast<std::size_t>(y) * res.width + x]; }
};

/// Sparse form of a MeanImage: listed pixels carry `prob`, every other pixel
/// has probability `epsilon`.
struct InkMap {
  Resolution res;
  double epsilon = 1e-4;
  std::vector<std::uint32_t> index;
  std::vector<double> prob;

  MeanImage to_dense(const InkParams& params) const;
};

}  // namespace rvc
