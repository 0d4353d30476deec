#include "rvc/ink_fit.hpp"

#include <cmath>

#include "rvc/error.hpp"

namespace rvc {

std::vector<TurtleTrajectory> random_scribbles(std::size_t n, std::uint64_t seed, double common_width) {
  static constexpr char kAlphabet[] = {'F', 'G', '+', '-'};
  static constexpr double kAngles[] = {15, 30, 45, 60, 72, 90, 120};
  Rng rng(seed);
  std::vector<TurtleTrajectory> out;
  out.reserve(n);
  while (out.size() < n) {
    const std::size_t len = 4 + uniform_index(rng, 28);
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += kAlphabet[uniform_index(rng, 4)];
    const double angle = kAngles[uniform_index(rng, std::size(kAngles))];
    TurtleTrajectory t = trace(SymbolString::trusted(s), angle);
    if (t.segments.empty()) continue;
    out.push_back(normalize(t, common_width));
  }
  return out;
}

std::vector<ScribblePair> display_scribble_corpus(std::size_t n, std::uint64_t seed,
                                                  const RenderSettings& settings) {
  Rasterizer raster(settings.res);
  std::vector<ScribblePair> corpus;
  for (auto& t : random_scribbles(n, seed, settings.common_width)) {
    BinaryImage img = raster.draw(t.segments, settings.pen);
    corpus.push_back({std::move(t), std::move(img)});
  }
  return corpus;
}

double corpus_log_likelihood(std::span<const ScribblePair> corpus, const InkParams& params,
                             Resolution res) {
  Rasterizer raster(res);
  double total = 0.0;
  for (const auto& item : corpus) {
    total += log_likelihood(item.image, raster.render(item.trajectory.segments, params));
  }
  return total;
}

double maximize_scalar(const std::function<double(double)>& f, double lo, double hi, int grid,
                       int refine_iters) {
  double best_x = lo;
  double best_f = -INFINITY;
  int best_i = 0;
  const double step = (hi - lo) / grid;
  for (int i = 0; i <= grid; ++i) {
    const double x = lo + i * step;
    const double v = f(x);
    if (v > best_f) {
      best_f = v;
      best_x = x;
      best_i = i;
    }
  }
  double a = lo + std::max(0, best_i - 1) * step;
  double b = lo + std::min(grid, best_i + 1) * step;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < refine_iters; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  const double x = fc > fd ? c : d;
  const double fx = std::max(fc, fd);
  return fx >= best_f ? x : best_x;
}

InkFitResult fit_ink_params(std::span<const ScribblePair> corpus, Resolution res,
                            const InkFitOptions& options) {
  if (corpus.size() < kMinScribbles) {
    throw InsufficientData("ink fitting needs at least " + std::to_string(kMinScribbles) +
                           " scribbles, got " + std::to_string(corpus.size()));
  }
  Rasterizer raster(res);
  // Deposits are linear in ink per pixel, so compute them once at unit ink.
  struct Cached {
    std::vector<std::uint32_t> index;
    std::vector<double> amount;
    std::size_t n_black;
  };
  std::vector<Cached> cache(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!(corpus[i].image.res == res)) throw DimensionMismatch("scribble image resolution mismatch");
    raster.deposit(corpus[i].trajectory.segments, 1.0, cache[i].index, cache[i].amount);
    cache[i].n_black = corpus[i].image.count_black();
  }
  std::vector<double> scaled;
  auto make = [&](double ink, double sigma, double eps) {
    if (options.fit_blur) return make_ink_params(ink, sigma, eps);
    InkParams p = options.initial;
    p.ink_per_px = ink;
    p.epsilon = eps;
    return p;
  };
  auto objective = [&](double ink, double sigma, double eps) {
    const InkParams p = make(ink, sigma, eps);
    double total = 0.0;
    for (std::size_t i = 0; i < cache.size(); ++i) {
      scaled.resize(cache[i].amount.size());
      for (std::size_t j = 0; j < scaled.size(); ++j) scaled[j] = cache[i].amount[j] * ink;
      total += log_likelihood(corpus[i].image, raster.finish(cache[i].index, scaled, p), cache[i].n_black);
    }
    return total;
  };

  double ink = options.initial.ink_per_px;
  double sigma = options.initial.blur_sigma;
  double eps = options.initial.epsilon;
  for (int sweep = 0; sweep < options.sweeps; ++sweep) {
    if (options.fit_ink) {
      ink = std::exp(maximize_scalar([&](double li) { return objective(std::exp(li), sigma, eps); },
                                     std::log(options.ink_lo), std::log(options.ink_hi)));
    }
    if (options.fit_blur) {
      sigma = maximize_scalar([&](double s) { return objective(ink, s, eps); }, options.sigma_lo,
                              options.sigma_hi);
    }
    if (options.fit_epsilon) {
      eps = std::exp(maximize_scalar([&](double le) { return objective(ink, sigma, std::exp(le)); },
                                     std::log(options.eps_lo), std::log(options.eps_hi)));
    }
  }
  InkFitResult result;
  result.params = make(ink, sigma, eps);
  result.log_likelihood = objective(ink, sigma, eps);
  return result;
}

}  // namespace rvc
