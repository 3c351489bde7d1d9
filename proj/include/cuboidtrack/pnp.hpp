#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "cuboidtrack/errors.hpp"
#include "cuboidtrack/geometry.hpp"

namespace cuboidtrack {

// Weighted 2D-3D correspondences. Model points come from cuboid_vertices at
// the canonical pose (plus the center at the origin in the 9-point variant);
// weights are inverse variances of the image points.
struct PnPProblem {
  std::vector<Vec2> image_points;
  std::vector<Vec3> model_points;
  std::vector<double> weights;
  CameraIntrinsics camera;
};

struct PoseEstimate {
  RigidTransform pose;
  double reprojection_rmse = 0.0;  // unweighted pixel RMSE
  bool converged = false;
};

namespace pnp_detail {

inline void check_problem(const PnPProblem& p) {
  const size_t n = p.image_points.size();
  if (n < 4) {
    throw DegenerateProblem("solve_pnp: need at least 4 points, got " + std::to_string(n));
  }
  if (p.model_points.size() != n || p.weights.size() != n) {
    throw DegenerateProblem("solve_pnp: mismatched correspondence arrays");
  }
  for (const double w : p.weights) {
    if (!(w > 0.0)) throw DegenerateProblem("solve_pnp: weights must be positive");
  }
  // Collinear image points leave the pose unobservable.
  Vec2 mean = Vec2::Zero();
  for (const auto& u : p.image_points) mean += u;
  mean /= static_cast<double>(n);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& u : p.image_points) {
    const Vec2 d = u - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  if (es.eigenvalues()(0) <= 1e-12 * std::max(es.eigenvalues()(1), 1.0)) {
    throw DegenerateProblem("solve_pnp: image points are collinear");
  }
}

// Residual stack r (2n, weighted) and optionally the Jacobian w.r.t. the
// [axis-angle, translation] increment applied on the left of the rotation.
// Returns false when any model point lands at non-positive depth.
inline bool residuals_jacobian(const RigidTransform& pose, const PnPProblem& p,
                               Eigen::VectorXd& r, Eigen::Matrix<double, Eigen::Dynamic, 6>* jac) {
  const size_t n = p.image_points.size();
  r.resize(2 * static_cast<Eigen::Index>(n));
  if (jac) jac->resize(2 * static_cast<Eigen::Index>(n), 6);
  for (size_t i = 0; i < n; ++i) {
    const Vec3 pc = pose.apply(p.model_points[i]);
    if (pc.z() <= 0.0) return false;
    const double sw = std::sqrt(p.weights[i]);
    const double inv_z = 1.0 / pc.z();
    const Vec2 proj(p.camera.fx * pc.x() * inv_z + p.camera.cx,
                    p.camera.fy * pc.y() * inv_z + p.camera.cy);
    r.segment<2>(2 * static_cast<Eigen::Index>(i)) = sw * (proj - p.image_points[i]);
    if (jac) {
      Eigen::Matrix<double, 2, 3> du;
      du << p.camera.fx * inv_z, 0.0, -p.camera.fx * pc.x() * inv_z * inv_z,
            0.0, p.camera.fy * inv_z, -p.camera.fy * pc.y() * inv_z * inv_z;
      Eigen::Matrix<double, 3, 6> dp;
      dp.block<3, 3>(0, 0) = -skew(pc - pose.translation);  // left perturbation of R
      dp.block<3, 3>(0, 3) = Mat3::Identity();
      jac->block<2, 6>(2 * static_cast<Eigen::Index>(i), 0) = sw * du * dp;
    }
  }
  return true;
}

inline double pixel_rmse(const RigidTransform& pose, const PnPProblem& p) {
  double se = 0.0;
  for (size_t i = 0; i < p.image_points.size(); ++i) {
    const Vec3 pc = pose.apply(p.model_points[i]);
    if (pc.z() <= 0.0) return std::numeric_limits<double>::infinity();
    const Vec2 proj(p.camera.fx * pc.x() / pc.z() + p.camera.cx,
                    p.camera.fy * pc.y() / pc.z() + p.camera.cy);
    se += (proj - p.image_points[i]).squaredNorm();
  }
  return std::sqrt(se / static_cast<double>(p.image_points.size()));
}

// Direct linear transform on normalized image coordinates; needs >= 6
// points. Output is the nearest rigid pose of the projective solution.
inline std::optional<RigidTransform> dlt(const PnPProblem& p) {
  const size_t n = p.image_points.size();
  if (n < 6) return std::nullopt;
  Eigen::MatrixXd a(2 * static_cast<Eigen::Index>(n), 12);
  for (size_t i = 0; i < n; ++i) {
    const Vec3& x = p.model_points[i];
    const double xn = (p.image_points[i].x() - p.camera.cx) / p.camera.fx;
    const double yn = (p.image_points[i].y() - p.camera.cy) / p.camera.fy;
    const Eigen::Index row = 2 * static_cast<Eigen::Index>(i);
    a.row(row) << x.x(), x.y(), x.z(), 1, 0, 0, 0, 0, -xn * x.x(), -xn * x.y(), -xn * x.z(), -xn;
    a.row(row + 1) << 0, 0, 0, 0, x.x(), x.y(), x.z(), 1, -yn * x.x(), -yn * x.y(), -yn * x.z(), -yn;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  Eigen::VectorXd v = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> pm;
  pm.row(0) = v.segment<4>(0);
  pm.row(1) = v.segment<4>(4);
  pm.row(2) = v.segment<4>(8);
  Mat3 m = pm.block<3, 3>(0, 0);
  if (m.determinant() < 0.0) {
    pm = -pm;
    m = -m;
  }
  const double det = m.determinant();
  if (!(det > 1e-12)) return std::nullopt;
  const double scale = 1.0 / std::cbrt(det);
  RigidTransform t;
  t.rotation = orthonormalize(scale * m);
  t.translation = scale * pm.col(3);
  return t;
}

// Fallback start when too few points for DLT: camera-facing pose at a depth
// matched to the spread of the image points.
inline RigidTransform rough_init(const PnPProblem& p) {
  double model_radius = 0.0;
  for (const auto& x : p.model_points) model_radius = std::max(model_radius, x.norm());
  Vec2 mean = Vec2::Zero();
  for (const auto& u : p.image_points) mean += u;
  mean /= static_cast<double>(p.image_points.size());
  double px_radius = 0.0;
  for (const auto& u : p.image_points) px_radius = std::max(px_radius, (u - mean).norm());
  const double depth = std::max(model_radius * p.camera.fx / std::max(px_radius, 1.0), 0.1);
  RigidTransform t;
  t.translation = unproject(mean, depth, p.camera);
  return t;
}

}  // namespace pnp_detail

inline std::vector<Vec2> reprojection_residuals(const RigidTransform& pose, const PnPProblem& problem) {
  pnp_detail::check_problem(problem);
  Eigen::VectorXd r;
  if (!pnp_detail::residuals_jacobian(pose, problem, r, nullptr)) {
    throw NonPositiveDepth("reprojection_residuals: model point behind the camera");
  }
  std::vector<Vec2> out(problem.image_points.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = r.segment<2>(2 * static_cast<Eigen::Index>(i));
  return out;
}

struct PnPOptions {
  int max_iterations = 100;
  double initial_damping = 1e-3;
  double step_tolerance = 1e-10;
  double gradient_tolerance = 1e-8;
};

// Levenberg-Marquardt minimization of the weighted reprojection error.
// Damping scales diag(J^T J) (Marquardt form), multiplied by 10 on a rejected
// step and by 0.1 on an accepted one. Steps that put a model point behind the
// camera are rejected outright. Without an init, a DLT bootstrap (or a
// camera-facing guess below 6 points) supplies the start.
inline PoseEstimate solve_pnp(const PnPProblem& problem,
                              const std::optional<RigidTransform>& init = {},
                              const PnPOptions& opts = {}) {
  pnp_detail::check_problem(problem);

  RigidTransform pose;
  if (init) {
    pose = *init;
  } else if (auto d = pnp_detail::dlt(problem)) {
    pose = *d;
  } else {
    pose = pnp_detail::rough_init(problem);
  }

  Eigen::VectorXd r;
  Eigen::Matrix<double, Eigen::Dynamic, 6> jac;
  if (!pnp_detail::residuals_jacobian(pose, problem, r, &jac)) {
    // Bad start (points behind the camera): retry from the rough guess.
    pose = pnp_detail::rough_init(problem);
    if (!pnp_detail::residuals_jacobian(pose, problem, r, &jac)) {
      throw NonPositiveDepth("solve_pnp: no feasible starting pose");
    }
  }

  double cost = r.squaredNorm();
  double damping = opts.initial_damping;
  bool converged = false;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
    const Eigen::Matrix<double, 6, 1> g = jac.transpose() * r;
    if (g.norm() < opts.gradient_tolerance) {
      converged = true;
      break;
    }
    Eigen::Matrix<double, 6, 6> aug = jtj;
    for (int i = 0; i < 6; ++i) {
      aug(i, i) += damping * std::max(jtj(i, i), 1e-12);
    }
    const Eigen::Matrix<double, 6, 1> step = aug.ldlt().solve(-g);
    if (step.norm() < opts.step_tolerance) {
      converged = true;
      break;
    }

    RigidTransform candidate;
    candidate.rotation = orthonormalize(axis_angle_to_matrix(step.head<3>()) * pose.rotation);
    candidate.translation = pose.translation + step.tail<3>();

    Eigen::VectorXd r_new;
    Eigen::Matrix<double, Eigen::Dynamic, 6> jac_new;
    const bool feasible = pnp_detail::residuals_jacobian(candidate, problem, r_new, &jac_new);
    if (feasible && r_new.squaredNorm() < cost) {
      pose = candidate;
      r.swap(r_new);
      jac.swap(jac_new);
      cost = r.squaredNorm();
      damping = std::max(damping * 0.1, 1e-12);
    } else {
      damping *= 10.0;
      if (damping > 1e12) break;
    }
  }

  PoseEstimate out;
  out.pose = pose;
  out.reprojection_rmse = pnp_detail::pixel_rmse(pose, problem);
  out.converged = converged;
  return out;
}

}  // namespace cuboidtrack
