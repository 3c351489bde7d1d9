#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "cuboidtrack/errors.hpp"
#include "cuboidtrack/geometry.hpp"

namespace cuboidtrack {

// Confidence-to-scale curve for rendering prior predictions:
//   k = max(1 - c^((a - sigma)/(a - b)), 0)
// a is the std dev at which the rendered peak vanishes, b the reference std
// dev where k = 1 - c.
struct ScaleCurve {
  double a = 9.0;
  double b = 3.0;
  double c = 0.15;
};

inline double render_scale(double sigma, const ScaleCurve& curve = {}) {
  const double k = 1.0 - std::pow(curve.c, (curve.a - sigma) / (curve.a - curve.b));
  return std::max(k, 0.0);
}

// Inverse of render_scale, clamped to [0.5, a] so recovered variances stay
// finite and positive for downstream fusion.
inline double invert_render_scale(double confidence, const ScaleCurve& curve = {}) {
  const double lo = 0.5;
  if (confidence <= 0.0) return curve.a;
  if (confidence >= 1.0) return lo;
  const double sigma = curve.a - (curve.a - curve.b) * std::log(1.0 - confidence) / std::log(curve.c);
  return std::clamp(sigma, lo, curve.a);
}

struct PeakDetection {
  Vec2 location = Vec2::Zero();  // pixels, sub-cell refined
  double confidence = 0.0;
  Vec2 sigma = Vec2::Ones();  // pixel std dev per axis
};

// Row-major confidence grid at `stride` pixels per cell. Cell (ix, iy)
// samples the pixel location ((ix + 0.5) * stride, (iy + 0.5) * stride).
class Heatmap {
 public:
  Heatmap() = default;
  Heatmap(int width_cells, int height_cells, double stride)
      : width_(width_cells), height_(height_cells), stride_(stride),
        values_(static_cast<size_t>(width_cells) * static_cast<size_t>(height_cells), 0.0) {}

  static Heatmap for_camera(const CameraIntrinsics& k, double stride = 4.0) {
    return Heatmap(static_cast<int>(std::ceil(k.width / stride)),
                   static_cast<int>(std::ceil(k.height / stride)), stride);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double stride() const { return stride_; }
  bool empty() const { return values_.empty(); }

  double at(int ix, int iy) const { return values_[index(ix, iy)]; }
  double& at(int ix, int iy) { return values_[index(ix, iy)]; }

  Vec2 cell_center(int ix, int iy) const {
    return Vec2((ix + 0.5) * stride_, (iy + 0.5) * stride_);
  }

  void clear() { std::fill(values_.begin(), values_.end(), 0.0); }

  // Pixel-space extent covered by the grid.
  double pixel_width() const { return width_ * stride_; }
  double pixel_height() const { return height_ * stride_; }

  // Bilinear sample over cell centers, clamped at the border. Returns 0 for
  // an empty map.
  double sample(const Vec2& px) const {
    if (values_.empty()) return 0.0;
    const double gx = px.x() / stride_ - 0.5;
    const double gy = px.y() / stride_ - 0.5;
    const int x0 = std::clamp(static_cast<int>(std::floor(gx)), 0, width_ - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor(gy)), 0, height_ - 1);
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const double fx = std::clamp(gx - x0, 0.0, 1.0);
    const double fy = std::clamp(gy - y0, 0.0, 1.0);
    const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
    const double bot = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
    return top * (1.0 - fy) + bot * fy;
  }

 private:
  size_t index(int ix, int iy) const {
    return static_cast<size_t>(iy) * static_cast<size_t>(width_) + static_cast<size_t>(ix);
  }

  int width_ = 0;
  int height_ = 0;
  double stride_ = 4.0;
  std::vector<double> values_;
};

// Renders a scaled Gaussian by element-wise max. Centers outside the grid
// render nothing. Composition by max keeps rendering order-independent.
inline void render_gaussian(Heatmap& map, const Vec2& center, const Vec2& sigma, double scale) {
  if (map.empty() || scale <= 0.0) return;
  if (center.x() < 0.0 || center.x() >= map.pixel_width() ||
      center.y() < 0.0 || center.y() >= map.pixel_height()) {
    return;
  }
  const double sx = std::max(sigma.x(), 1e-9);
  const double sy = std::max(sigma.y(), 1e-9);
  // Support box of 4 sigma, but never smaller than one cell so the
  // containing cell always receives the peak.
  const double rx = std::max(4.0 * sx, map.stride());
  const double ry = std::max(4.0 * sy, map.stride());
  const int ix0 = std::max(0, static_cast<int>(std::floor((center.x() - rx) / map.stride() - 0.5)));
  const int ix1 = std::min(map.width() - 1, static_cast<int>(std::ceil((center.x() + rx) / map.stride() - 0.5)));
  const int iy0 = std::max(0, static_cast<int>(std::floor((center.y() - ry) / map.stride() - 0.5)));
  const int iy1 = std::min(map.height() - 1, static_cast<int>(std::ceil((center.y() + ry) / map.stride() - 0.5)));
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      const Vec2 p = map.cell_center(ix, iy);
      const double dx = p.x() - center.x();
      const double dy = p.y() - center.y();
      const double v = scale * std::exp(-dx * dx / (2.0 * sx * sx) - dy * dy / (2.0 * sy * sy));
      double& cell = map.at(ix, iy);
      cell = std::max(cell, v);
    }
  }
}

namespace detail {

// Vertex offset of the parabola through (-1, l), (0, c), (1, r), clamped to
// half a cell.
inline double quadratic_peak_offset(double l, double c, double r) {
  const double denom = 2.0 * c - l - r;
  if (denom <= 1e-12) return 0.0;
  return std::clamp((r - l) / (2.0 * denom), -0.5, 0.5);
}

}  // namespace detail

// Local maxima above threshold, sub-cell refined by a per-axis quadratic fit.
// Sigma is recovered by inverting the rendering scale curve on the peak
// confidence. Results are sorted by descending confidence.
inline std::vector<PeakDetection> extract_peaks(const Heatmap& map, double threshold,
                                                size_t max_peaks,
                                                const ScaleCurve& curve = {}) {
  std::vector<PeakDetection> peaks;
  for (int iy = 0; iy < map.height(); ++iy) {
    for (int ix = 0; ix < map.width(); ++ix) {
      const double v = map.at(ix, iy);
      if (v <= threshold) continue;
      bool is_peak = true;
      for (int dy = -1; dy <= 1 && is_peak; ++dy) {
        for (int dx = -1; dx <= 1 && is_peak; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = ix + dx;
          const int ny = iy + dy;
          if (nx < 0 || nx >= map.width() || ny < 0 || ny >= map.height()) continue;
          const double nv = map.at(nx, ny);
          // Plateau tie-break: cells earlier in scan order win.
          const bool earlier = (dy < 0) || (dy == 0 && dx < 0);
          if (earlier ? (nv >= v) : (nv > v)) is_peak = false;
        }
      }
      if (!is_peak) continue;

      double ox = 0.0, oy = 0.0;
      if (ix > 0 && ix + 1 < map.width()) {
        ox = detail::quadratic_peak_offset(map.at(ix - 1, iy), v, map.at(ix + 1, iy));
      }
      if (iy > 0 && iy + 1 < map.height()) {
        oy = detail::quadratic_peak_offset(map.at(ix, iy - 1), v, map.at(ix, iy + 1));
      }
      PeakDetection p;
      p.location = Vec2((ix + 0.5 + ox) * map.stride(), (iy + 0.5 + oy) * map.stride());
      p.confidence = std::min(v, 1.0);
      const double s = invert_render_scale(p.confidence, curve);
      p.sigma = Vec2(s, s);
      peaks.push_back(p);
    }
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const PeakDetection& a, const PeakDetection& b) { return a.confidence > b.confidence; });
  if (peaks.size() > max_peaks) peaks.resize(max_peaks);
  return peaks;
}

// Debug dump as binary PGM (P5, maxval 255).
inline bool write_pgm(const Heatmap& map, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) return false;
  std::fprintf(f, "P5\n%d %d\n255\n", map.width(), map.height());
  for (int iy = 0; iy < map.height(); ++iy) {
    for (int ix = 0; ix < map.width(); ++ix) {
      const double v = std::clamp(map.at(ix, iy), 0.0, 1.0);
      const auto byte = static_cast<uint8_t>(std::lround(v * 255.0));
      std::fputc(byte, f);
    }
  }
  std::fclose(f);
  return true;
}

}  // namespace cuboidtrack
