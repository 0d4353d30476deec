#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rvc/renderer.hpp"

namespace rvc {

/// A normalized trajectory and the image it was drawn as.
struct ScribblePair {
  TurtleTrajectory trajectory;
  BinaryImage image;
};

/// Minimum corpus size accepted by fit_ink_params.
inline constexpr std::size_t kMinScribbles = 50;

struct InkFitOptions {
  bool fit_ink = true;
  bool fit_blur = true;
  bool fit_epsilon = true;
  int sweeps = 4;
  InkParams initial{};
  double ink_lo = 0.05, ink_hi = 40.0;
  double sigma_lo = 0.0, sigma_hi = 2.5;
  double eps_lo = 1e-6, eps_hi = 0.45;
};

struct InkFitResult {
  InkParams params;
  double log_likelihood = 0.0;
};

/// Random turtle scribbles: random strings over {F,G,+,-} traced at random
/// angles and normalized.
std::vector<TurtleTrajectory> random_scribbles(std::size_t n, std::uint64_t seed,
                                               double common_width = kCommonWidth);

/// Scribbles paired with their display-pen drawings.
std::vector<ScribblePair> display_scribble_corpus(std::size_t n, std::uint64_t seed,
                                                  const RenderSettings& settings);

/// Sum of log_likelihood over the corpus under `params`.
double corpus_log_likelihood(std::span<const ScribblePair> corpus, const InkParams& params,
                             Resolution res);

/// Maximum-likelihood ink parameters by coordinate-wise search over ink per
/// pixel, blur width and epsilon. Throws InsufficientData below kMinScribbles.
InkFitResult fit_ink_params(std::span<const ScribblePair> corpus, Resolution res,
                            const InkFitOptions& options = {});

/// Grid scan followed by golden-section refinement of the best bracket.
double maximize_scalar(const std::function<double(double)>& f, double lo, double hi,
                       int grid = 24, int refine_iters = 48);

}  // namespace rvc
