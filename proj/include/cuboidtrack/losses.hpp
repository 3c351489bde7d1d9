#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "cuboidtrack/errors.hpp"

namespace cuboidtrack {

// Scalar loss with partial derivatives. d_pred is the derivative w.r.t. the
// prediction y_hat; d_unc w.r.t. the uncertainty parameter (b_hat for the
// Laplace losses, log(lambda * sigma^2) for kld_plus).
struct LossEval {
  double value = 0.0;
  double d_pred = 0.0;
  double d_unc = 0.0;
};

namespace detail {
inline double sign_or_zero(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
}  // namespace detail

// Laplace negative log likelihood: log(2 b_hat) + |y - y_hat| / b_hat.
// Unbounded below as b_hat -> 0 with zero residual.
inline LossEval nll(double y, double y_hat, double b_hat) {
  if (b_hat <= 0.0) {
    throw NonPositiveUncertainty("nll: b_hat must be positive, got " + std::to_string(b_hat));
  }
  const double r = y - y_hat;
  const double a = std::abs(r);
  LossEval out;
  out.value = std::log(2.0 * b_hat) + a / b_hat;
  out.d_pred = -detail::sign_or_zero(r) / b_hat;  // subgradient 0 at the kink
  out.d_unc = 1.0 / b_hat - a / (b_hat * b_hat);
  return out;
}

// KL divergence between Laplace(y, beta) and Laplace(y_hat, b_hat):
//   log(b_hat/beta) + (beta exp(-|y-y_hat|/beta) + |y-y_hat|) / b_hat - 1.
// Non-negative everywhere, zero iff b_hat = beta and y = y_hat.
inline LossEval kld(double y, double y_hat, double b_hat, double beta) {
  if (b_hat <= 0.0) {
    throw NonPositiveUncertainty("kld: b_hat must be positive, got " + std::to_string(b_hat));
  }
  if (beta <= 0.0) {
    throw NonPositiveUncertainty("kld: beta must be positive, got " + std::to_string(beta));
  }
  const double r = y - y_hat;
  const double a = std::abs(r);
  const double e = std::exp(-a / beta);
  LossEval out;
  out.value = std::log(b_hat / beta) + (beta * e + a) / b_hat - 1.0;
  out.d_pred = -detail::sign_or_zero(r) * (1.0 - e) / b_hat;
  out.d_unc = 1.0 / b_hat - (beta * e + a) / (b_hat * b_hat);
  return out;
}

struct KldPlusParams {
  double beta2 = 0.1;        // label uncertainty (squared units)
  double lambda = 0.25;      // coefficient on the predicted variance
  double grad_clip = 100.0;  // bound on each gradient component
};

// Squared-residual variant taking log(lambda * sigma^2) as the uncertainty
// input, with a 0.5 * lambda * sigma^2 regularizer:
//   log(u/beta2) + (beta2 exp(-(y-y_hat)^2/beta2) + (y-y_hat)^2) / u - 1 + u/2,
// where u = exp(input). The exp parameterization keeps u positive; gradient
// components are clipped at grad_clip.
inline LossEval kld_plus(double y, double y_hat, double log_lambda_sigma2,
                         const KldPlusParams& params = {}) {
  const double u = std::exp(log_lambda_sigma2);
  const double r = y - y_hat;
  const double r2 = r * r;
  const double e = std::exp(-r2 / params.beta2);
  LossEval out;
  out.value = std::log(u / params.beta2) + (params.beta2 * e + r2) / u - 1.0 + 0.5 * u;
  out.d_pred = -2.0 * r * (1.0 - e) / u;
  out.d_unc = 1.0 - (params.beta2 * e + r2) / u + 0.5 * u;  // chain rule through u = exp(s)
  const double c = params.grad_clip;
  out.d_pred = std::clamp(out.d_pred, -c, c);
  out.d_unc = std::clamp(out.d_unc, -c, c);
  return out;
}

// Recover sigma^2 from the log-parameterized uncertainty.
inline double sigma2_from_log(double log_lambda_sigma2, const KldPlusParams& params = {}) {
  return std::exp(log_lambda_sigma2) / params.lambda;
}

}  // namespace cuboidtrack
