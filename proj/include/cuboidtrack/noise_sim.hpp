#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "cuboidtrack/errors.hpp"
#include "cuboidtrack/geometry.hpp"

namespace cuboidtrack {

// Jitter/false-positive/false-negative rates for one point role.
struct NoiseRoleConfig {
  double sigma = 1.0;      // pixel std of the positional jitter
  double lambda_fp = 0.0;  // false-positive probability per render opportunity
  double lambda_fn = 0.0;  // false-negative (drop) probability
};

struct NoiseConfig {
  NoiseRoleConfig center{1.0, 0.1, 0.2};
  NoiseRoleConfig keypoint{1.0, 0.05, 0.1};
  double alpha = 2.0;       // scale decay base
  double beta_noise = 4.5;  // noise level at which the render scale reaches 0
  int frame_window = 5;     // paired-frame sampling half-window M_f

  bool valid() const {
    auto role_ok = [](const NoiseRoleConfig& r) {
      return r.sigma >= 0.0 && r.lambda_fp >= 0.0 && r.lambda_fp <= 1.0 &&
             r.lambda_fn >= 0.0 && r.lambda_fn <= 1.0;
    };
    return role_ok(center) && role_ok(keypoint) && alpha > 1.0 && frame_window >= 1;
  }
};

// Render scale for a corrupted point: k = max(1 - alpha^(n - beta), 0).
inline double noise_scale(double n, double alpha = 2.0, double beta = 4.5) {
  return std::max(1.0 - std::pow(alpha, n - beta), 0.0);
}

// keypoint_index -1 marks an object center.
struct LabeledPoint {
  Vec2 position = Vec2::Zero();
  int object_id = 0;
  int keypoint_index = -1;
};

struct CorruptedPoint {
  Vec2 position = Vec2::Zero();
  double scale = 0.0;
  int object_id = 0;
  int keypoint_index = -1;
  bool injected = false;
};

// Applies the three test-time corruptions to ground-truth points: Gaussian
// jitter, dropped points, and injected points uniform over the image.
// Keypoints are emitted only if their object center survived. Deterministic
// for a fixed seed.
inline std::vector<CorruptedPoint> corrupt(std::span<const LabeledPoint> points,
                                           const NoiseConfig& cfg, const Vec2& image_size,
                                           uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> ux(0.0, image_size.x());
  std::uniform_real_distribution<double> uy(0.0, image_size.y());
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<CorruptedPoint> out;
  std::unordered_set<int> live_centers;

  auto emit = [&](const LabeledPoint& p, const NoiseRoleConfig& role) {
    const Vec2 jitter(gauss(rng) * role.sigma, gauss(rng) * role.sigma);
    CorruptedPoint c;
    c.position = p.position + jitter;
    c.scale = noise_scale(jitter.norm(), cfg.alpha, cfg.beta_noise);
    c.object_id = p.object_id;
    c.keypoint_index = p.keypoint_index;
    out.push_back(c);
  };
  auto inject = [&](const LabeledPoint& p) {
    CorruptedPoint c;
    c.position = Vec2(ux(rng), uy(rng));
    c.scale = noise_scale(0.0, cfg.alpha, cfg.beta_noise);
    c.object_id = p.object_id;
    c.keypoint_index = p.keypoint_index;
    c.injected = true;
    out.push_back(c);
  };

  // Centers first: their survival gates every keypoint of the same object.
  for (const auto& p : points) {
    if (p.keypoint_index != -1) continue;
    if (coin(rng) >= cfg.center.lambda_fn) {
      emit(p, cfg.center);
      live_centers.insert(p.object_id);
    }
    if (coin(rng) < cfg.center.lambda_fp) inject(p);
  }
  for (const auto& p : points) {
    if (p.keypoint_index == -1) continue;
    if (!live_centers.contains(p.object_id)) continue;
    if (coin(rng) >= cfg.keypoint.lambda_fn) emit(p, cfg.keypoint);
    if (coin(rng) < cfg.keypoint.lambda_fp) inject(p);
  }
  return out;
}

// Uniform draw of a companion frame index k with |k - t| < frame_window and
// k != t, clipped to [0, length). Throws EmptyWindow when no index qualifies.
inline int sample_paired_frame(int t, int frame_window, int length, std::mt19937_64& rng) {
  std::vector<int> candidates;
  const int lo = std::max(0, t - frame_window + 1);
  const int hi = std::min(length - 1, t + frame_window - 1);
  for (int k = lo; k <= hi; ++k) {
    if (k != t) candidates.push_back(k);
  }
  if (candidates.empty()) {
    throw EmptyWindow("sample_paired_frame: no valid frame near t=" + std::to_string(t));
  }
  std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
  return candidates[pick(rng)];
}

}  // namespace cuboidtrack
