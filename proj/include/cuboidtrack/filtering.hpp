#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>

#include "cuboidtrack/errors.hpp"
#include "cuboidtrack/geometry.hpp"

namespace cuboidtrack {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Axis-independent 2D Gaussian: per-axis mean and variance.
struct GaussianEstimate2D {
  Vec2 mean = Vec2::Zero();
  Vec2 var = Vec2::Ones();

  bool valid() const {
    return var.x() > 0.0 && var.y() > 0.0 && std::isfinite(var.x()) && std::isfinite(var.y()) &&
           mean.allFinite();
  }
};

// Inverse-variance weighted fusion, applied per axis:
//   var = (sum var_i^-1)^-1,  mean = var * sum(var_i^-1 * mean_i).
// The fused variance never exceeds the smallest input variance.
inline GaussianEstimate2D bayes_fuse(std::span<const GaussianEstimate2D> estimates) {
  if (estimates.empty()) {
    throw EmptyInput("bayes_fuse: need at least one estimate");
  }
  Vec2 precision = Vec2::Zero();
  Vec2 weighted = Vec2::Zero();
  for (const auto& e : estimates) {
    precision += e.var.cwiseInverse();
    weighted += e.mean.cwiseQuotient(e.var);
  }
  GaussianEstimate2D out;
  out.var = precision.cwiseInverse();
  out.mean = out.var.cwiseProduct(weighted);
  return out;
}

inline GaussianEstimate2D bayes_fuse(const GaussianEstimate2D& a, const GaussianEstimate2D& b) {
  const GaussianEstimate2D pair[2] = {a, b};
  return bayes_fuse(std::span<const GaussianEstimate2D>(pair, 2));
}

// Per-keypoint filter state: [px, py, vx, vy] with full 4x4 covariance.
struct KeypointFilterState {
  Vec4 x = Vec4::Zero();
  Mat4 P = Mat4::Identity();

  Vec2 position() const { return x.head<2>(); }
  Vec2 velocity() const { return x.tail<2>(); }
  Vec2 position_var() const { return Vec2(P(0, 0), P(1, 1)); }
  Vec2 velocity_var() const { return Vec2(P(2, 2), P(3, 3)); }

  GaussianEstimate2D position_estimate() const { return {position(), position_var()}; }
};

// Constant-velocity transition with dt = 1 frame.
inline Mat4 constant_velocity_transition() {
  Mat4 f = Mat4::Identity();
  f(0, 2) = 1.0;
  f(1, 3) = 1.0;
  return f;
}

// Discrete white-noise-acceleration process covariance for dt = 1.
inline Mat4 white_noise_accel_q(double accel_std) {
  const double q = accel_std * accel_std;
  Mat4 m = Mat4::Zero();
  m(0, 0) = m(1, 1) = q / 4.0;
  m(2, 2) = m(3, 3) = q;
  m(0, 2) = m(2, 0) = q / 2.0;
  m(1, 3) = m(3, 1) = q / 2.0;
  return m;
}

namespace detail {
inline void symmetrize(Mat4& p) { p = ((p + p.transpose()) / 2.0).eval(); }
}  // namespace detail

inline KeypointFilterState kalman_predict(const KeypointFilterState& state, const Mat4& q) {
  static const Mat4 f = constant_velocity_transition();
  KeypointFilterState out;
  out.x = f * state.x;
  out.P = f * state.P * f.transpose() + q;
  detail::symmetrize(out.P);
  return out;
}

// Linear Gaussian update. The position measurement is the fused estimate from
// bayes_fuse; the velocity measurement, when present, is the predicted
// per-frame keypoint offset. Joseph form keeps the covariance positive
// definite over long runs.
inline KeypointFilterState kalman_update(const KeypointFilterState& state,
                                         const GaussianEstimate2D& z_pos,
                                         const std::optional<GaussianEstimate2D>& z_vel = {}) {
  KeypointFilterState out = state;
  if (z_vel) {
    Vec4 z;
    z << z_pos.mean, z_vel->mean;
    Mat4 r = Mat4::Zero();
    r.diagonal() << z_pos.var, z_vel->var;
    const Mat4 s = state.P + r;  // H = I
    const Mat4 k = state.P * s.inverse();
    out.x = state.x + k * (z - state.x);
    const Mat4 ik = Mat4::Identity() - k;
    out.P = ik * state.P * ik.transpose() + k * r * k.transpose();
  } else {
    using Mat24 = Eigen::Matrix<double, 2, 4>;
    Mat24 h = Mat24::Zero();
    h(0, 0) = 1.0;
    h(1, 1) = 1.0;
    const Eigen::Matrix2d r = z_pos.var.asDiagonal();
    const Eigen::Matrix2d s = h * state.P * h.transpose() + r;
    const Eigen::Matrix<double, 4, 2> k = state.P * h.transpose() * s.inverse();
    out.x = state.x + k * (z_pos.mean - h * state.x);
    const Mat4 ik = Mat4::Identity() - k * h;
    out.P = ik * state.P * ik.transpose() + k * r * k.transpose();
  }
  detail::symmetrize(out.P);
  return out;
}

// Track birth: position from the first observation, velocity zero with the
// configured initial variance.
inline KeypointFilterState make_track_state(const GaussianEstimate2D& first_obs,
                                            double init_velocity_var = 20.0) {
  KeypointFilterState s;
  s.x << first_obs.mean, 0.0, 0.0;
  s.P = Mat4::Zero();
  s.P(0, 0) = first_obs.var.x();
  s.P(1, 1) = first_obs.var.y();
  s.P(2, 2) = init_velocity_var;
  s.P(3, 3) = init_velocity_var;
  return s;
}

// Per-axis recursive fusion over the whole history of relative-dimension
// measurements; algebraically identical to batch inverse-variance fusion.
struct DimensionBelief {
  Vec3 mean = Vec3::Ones();
  Vec3 var = Vec3::Constant(1e12);

  bool valid() const {
    return (var.array() > 0.0).all() && (mean.array() > 0.0).all();
  }
};

inline DimensionBelief dim_update(const DimensionBelief& belief, const Vec3& obs_mean,
                                  const Vec3& obs_var) {
  DimensionBelief out;
  const Vec3 precision = belief.var.cwiseInverse() + obs_var.cwiseInverse();
  out.var = precision.cwiseInverse();
  out.mean = out.var.cwiseProduct(belief.mean.cwiseQuotient(belief.var) +
                                  obs_mean.cwiseQuotient(obs_var));
  return out;
}

// How the velocity measurement noise is sourced, plus process/initialization
// constants for the constant-velocity filter.
struct FilterParams {
  double velocity_meas_var = 20.0;  // px^2/frame^2 per axis on the offset observation
  // Alternative reading of the fixed velocity uncertainty: keep it only as
  // the initial state covariance and take measurement noise from the
  // observation's reported offset variance instead.
  bool velocity_var_from_observation = false;
  double init_velocity_var = 20.0;
  double accel_std = 0.5;  // px/frame^2, white-noise acceleration

  Mat4 process_noise() const { return white_noise_accel_q(accel_std); }
};

}  // namespace cuboidtrack
