#include "rvc/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rvc/error.hpp"

namespace rvc {

std::vector<double> gaussian_stencil(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = std::max(1, static_cast<int>(std::ceil(2.5 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
  }
  const double total = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) v /= total;
  return k;
}

InkParams make_ink_params(double ink_per_px, double blur_sigma, double epsilon) {
  InkParams p;
  p.ink_per_px = ink_per_px;
  p.blur = gaussian_stencil(blur_sigma);
  p.blur_sigma = blur_sigma;
  p.epsilon = epsilon;
  return p;
}

void check_ink_params(const InkParams& p) {
  if (!(p.epsilon > 0.0 && p.epsilon < 0.5)) throw Error("ink epsilon must lie in (0, 0.5)");
  if (p.blur.empty() || p.blur.size() % 2 == 0) throw Error("blur stencil must have odd length");
  double total = 0.0;
  for (double v : p.blur) {
    if (v < 0.0) throw Error("blur stencil must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("blur stencil must sum to 1");
  if (!(p.ink_per_px >= 0.0)) throw Error("ink per pixel must be nonnegative");
}

std::size_t BinaryImage::count_black() const {
  return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
}

MeanImage InkMap::to_dense(const InkParams& params) const {
  MeanImage m;
  m.res = res;
  m.params = params;
  m.prob.assign(res.pixels(), epsilon);
  for (std::size_t i = 0; i < index.size(); ++i) m.prob[index[i]] = prob[i];
  return m;
}

Rasterizer::Rasterizer(Resolution res)
    : res_(res),
      ink_(res.pixels(), 0.0),
      tmp_(res.pixels(), 0.0),
      mark_ink_(res.pixels(), 0),
      mark_tmp_(res.pixels(), 0) {}

void Rasterizer::deposit(std::span<const Segment> segs, double ink_per_px,
                         std::vector<std::uint32_t>& index, std::vector<double>& amount) {
  const int W = res_.width;
  const int H = res_.height;
  touched_.clear();
  auto add = [&](int c, int r, double v) {
    if (c < 0 || r < 0 || c >= W || r >= H || v == 0.0) return;
    const auto p = static_cast<std::uint32_t>(r * W + c);
    if (!mark_ink_[p]) {
      mark_ink_[p] = 1;
      touched_.push_back(p);
    }
    ink_[p] += v;
  };
  for (const Segment& s : segs) {
    const double x0 = s.start.x * W, y0 = (1.0 - s.start.y) * H;
    const double x1 = s.end.x * W, y1 = (1.0 - s.end.y) * H;
    const double len = std::hypot(x1 - x0, y1 - y0);
    if (len <= 0.0) continue;
    const int n = std::max(1, static_cast<int>(std::ceil(2.0 * len)));
    const double per = ink_per_px * len / n;
    for (int i = 0; i < n; ++i) {
      const double t = (i + 0.5) / n;
      const double u = x0 + t * (x1 - x0) - 0.5;
      const double v = y0 + t * (y1 - y0) - 0.5;
      const double cu = std::floor(u), cv = std::floor(v);
      const double fx = u - cu, fy = v - cv;
      const int c = static_cast<int>(cu), r = static_cast<int>(cv);
      add(c, r, per * (1 - fx) * (1 - fy));
      add(c + 1, r, per * fx * (1 - fy));
      add(c, r + 1, per * (1 - fx) * fy);
      add(c + 1, r + 1, per * fx * fy);
    }
  }
  index.assign(touched_.begin(), touched_.end());
  amount.resize(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    amount[i] = ink_[index[i]];
    ink_[index[i]] = 0.0;
    mark_ink_[index[i]] = 0;
  }
}

InkMap Rasterizer::finish(std::span<const std::uint32_t> index, std::span<const double> amount,
                          const InkParams& params) {
  const int W = res_.width;
  const int H = res_.height;
  const int radius = static_cast<int>(params.blur.size() / 2);
  const double* k = params.blur.data() + radius;

  // Horizontal pass into tmp_, vertical pass into ink_.
  touched_tmp_.clear();
  for (std::size_t i = 0; i < index.size(); ++i) {
    const int r = static_cast<int>(index[i]) / W;
    const int c = static_cast<int>(index[i]) % W;
    for (int d = -radius; d <= radius; ++d) {
      const int cc = c + d;
      if (cc < 0 || cc >= W || k[d] == 0.0) continue;
      const auto p = static_cast<std::uint32_t>(r * W + cc);
      if (!mark_tmp_[p]) {
        mark_tmp_[p] = 1;
        touched_tmp_.push_back(p);
      }
      tmp_[p] += amount[i] * k[d];
    }
  }
  touched_out_.clear();
  for (std::uint32_t p : touched_tmp_) {
    const int r = static_cast<int>(p) / W;
    const int c = static_cast<int>(p) % W;
    const double v = tmp_[p];
    tmp_[p] = 0.0;
    mark_tmp_[p] = 0;
    for (int d = -radius; d <= radius; ++d) {
      const int rr = r + d;
      if (rr < 0 || rr >= H || k[d] == 0.0) continue;
      const auto q = static_cast<std::uint32_t>(rr * W + c);
      if (!mark_ink_[q]) {
        mark_ink_[q] = 1;
        touched_out_.push_back(q);
      }
      ink_[q] += v * k[d];
    }
  }

  InkMap out;
  out.res = res_;
  out.epsilon = params.epsilon;
  out.index.reserve(touched_out_.size());
  out.prob.reserve(touched_out_.size());
  const double span = 1.0 - 2.0 * params.epsilon;
  for (std::uint32_t q : touched_out_) {
    const double v = std::clamp(ink_[q], 0.0, 1.0);
    ink_[q] = 0.0;
    mark_ink_[q] = 0;
    if (v > 0.0) {
      out.index.push_back(q);
      out.prob.push_back(params.epsilon + span * v);
    }
  }
  return out;
}

InkMap Rasterizer::render(std::span<const Segment> normalized, const InkParams& params) {
  deposit(normalized, params.ink_per_px, scratch_index_, scratch_amount_);
  return finish(scratch_index_, scratch_amount_, params);
}

BinaryImage Rasterizer::draw(std::span<const Segment> segs, const DisplayPen& pen) {
  const int W = res_.width;
  const int H = res_.height;
  BinaryImage img(res_);
  const double r = 0.5 * pen.width_px;
  const double r2 = r * r;
  for (const Segment& s : segs) {
    const double x0 = s.start.x * W, y0 = (1.0 - s.start.y) * H;
    const double x1 = s.end.x * W, y1 = (1.0 - s.end.y) * H;
    const double dx = x1 - x0, dy = y1 - y0;
    const double len2 = dx * dx + dy * dy;
    const int c_lo = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - r - 0.5)));
    const int c_hi = std::min(W - 1, static_cast<int>(std::ceil(std::max(x0, x1) + r - 0.5)));
    const int r_lo = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - r - 0.5)));
    const int r_hi = std::min(H - 1, static_cast<int>(std::ceil(std::max(y0, y1) + r - 0.5)));
    for (int row = r_lo; row <= r_hi; ++row) {
      const double py = row + 0.5;
      for (int col = c_lo; col <= c_hi; ++col) {
        const double px = col + 0.5;
        double t = len2 > 0.0 ? ((px - x0) * dx + (py - y0) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double ex = x0 + t * dx - px, ey = y0 + t * dy - py;
        if (ex * ex + ey * ey < r2) img.pixels[static_cast<std::size_t>(row) * W + col] = 1;
      }
    }
  }
  return img;
}

MeanImage rasterize(const TurtleTrajectory& normalized, const InkParams& params, Resolution res) {
  Rasterizer raster(res);
  return raster.render(normalized.segments, params).to_dense(params);
}

BinaryImage draw_binary(const TurtleTrajectory& normalized, Resolution res, DisplayPen pen) {
  Rasterizer raster(res);
  return raster.draw(normalized.segments, pen);
}

InkMap render_ink(const SymbolString& s, double angle_deg, const RenderSettings& settings,
                  Rasterizer& raster, std::vector<Segment>& scratch) {
  trace_from_origin(s.view(), angle_deg, settings.turns, scratch);
  if (scratch.empty()) {
    InkMap m;
    m.res = settings.res;
    m.epsilon = settings.ink.epsilon;
    return m;
  }
  normalize_in_place(scratch, settings.common_width);
  return raster.render(scratch, settings.ink);
}

MeanImage render_mean(const SymbolString& s, double angle_deg, const RenderSettings& settings) {
  Rasterizer raster(settings.res);
  std::vector<Segment> scratch;
  return render_ink(s, angle_deg, settings, raster, scratch).to_dense(settings.ink);
}

BinaryImage render_display(const SymbolString& s, double angle_deg, const RenderSettings& settings,
                           Rasterizer& raster, std::vector<Segment>& scratch) {
  trace_from_origin(s.view(), angle_deg, settings.turns, scratch);
  if (scratch.empty()) return BinaryImage(settings.res);
  normalize_in_place(scratch, settings.common_width);
  return raster.draw(scratch, settings.pen);
}

BinaryImage render_display(const SymbolString& s, double angle_deg, const RenderSettings& settings) {
  Rasterizer raster(settings.res);
  std::vector<Segment> scratch;
  return render_display(s, angle_deg, settings, raster, scratch);
}

FrameTransform display_frame(const SymbolString& s, double angle_deg, const RenderSettings& settings) {
  std::vector<Segment> segs;
  trace_from_origin(s.view(), angle_deg, settings.turns, segs);
  if (segs.empty()) return {};
  return normalizing_transform(segs, settings.common_width);
}

InkMap render_ink_in_frame(const SymbolString& s, double angle_deg, const FrameTransform& frame,
                           const RenderSettings& settings, Rasterizer& raster,
                           std::vector<Segment>& scratch) {
  trace_from_origin(s.view(), angle_deg, settings.turns, scratch);
  apply_transform(scratch, frame);
  return raster.render(scratch, settings.ink);
}

BinaryImage render_display_in_frame(const SymbolString& s, double angle_deg, const FrameTransform& frame,
                                    const RenderSettings& settings, Rasterizer& raster,
                                    std::vector<Segment>& scratch) {
  trace_from_origin(s.view(), angle_deg, settings.turns, scratch);
  apply_transform(scratch, frame);
  return raster.draw(scratch, settings.pen);
}

BinaryImage sample_image(const MeanImage& m, Rng& rng) {
  BinaryImage img(m.res);
  for (std::size_t i = 0; i < m.prob.size(); ++i) {
    img.pixels[i] = uniform01(rng) < m.prob[i] ? 1 : 0;
  }
  return img;
}

BinaryImage sample_image(const MeanImage& m, std::uint64_t seed) {
  Rng rng(seed);
  return sample_image(m, rng);
}

BinaryImage threshold(const MeanImage& m, double level) {
  BinaryImage img(m.res);
  for (std::size_t i = 0; i < m.prob.size(); ++i) img.pixels[i] = m.prob[i] > level ? 1 : 0;
  return img;
}

double log_likelihood(const BinaryImage& image, const MeanImage& mean) {
  if (!(image.res == mean.res) || image.pixels.size() != mean.prob.size()) {
    throw DimensionMismatch("image and mean image differ in size");
  }
  double ll = 0.0;
  for (std::size_t i = 0; i < mean.prob.size(); ++i) {
    ll += image.pixels[i] ? std::log(mean.prob[i]) : std::log1p(-mean.prob[i]);
  }
  return ll;
}

double log_likelihood(const BinaryImage& image, const InkMap& mean, std::size_t n_black) {
  if (!(image.res == mean.res) || image.pixels.size() != mean.res.pixels()) {
    throw DimensionMismatch("image and ink map differ in size");
  }
  const double log_eps = std::log(mean.epsilon);
  const double log_not_eps = std::log1p(-mean.epsilon);
  const double n_white = static_cast<double>(image.pixels.size() - n_black);
  double ll = static_cast<double>(n_black) * log_eps + n_white * log_not_eps;
  for (std::size_t i = 0; i < mean.index.size(); ++i) {
    const double m = mean.prob[i];
    if (image.pixels[mean.index[i]]) {
      ll += std::log(m) - log_eps;
    } else {
      ll += std::log1p(-m) - log_not_eps;
    }
  }
  return ll;
}

double log_likelihood(const BinaryImage& image, const InkMap& mean) {
  return log_likelihood(image, mean, image.count_black());
}

}  // namespace rvc
