#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "bssr/errors.hpp"
#include "bssr/kernels.hpp"
#include "bssr/model.hpp"
#include "bssr/rng.hpp"

namespace bssr {

// Tuning for the doubling slice sampler. Width choices are non-critical;
// doubling expands the interval geometrically.
struct SliceConfig {
  double initial_width = 1.0;
  int max_doublings = 10;

  void validate() const {
    if (!(initial_width > 0)) throw std::invalid_argument("SliceConfig: initial_width must be positive");
    if (max_doublings < 1) throw std::invalid_argument("SliceConfig: max_doublings >= 1 required");
  }
};

struct EssResult {
  Eigen::VectorXd gamma;
  double loglik;
  int proposals_tried;
};

// Elliptical slice sampling transition for gamma ~ N(0, Sigma) with an
// arbitrary log-likelihood (Murray, Adams & MacKay 2010). Rejection-free:
// the angle bracket [theta - 2pi, theta] shrinks toward 0, where the
// proposal coincides with the current state, so termination is guaranteed.
template <typename Loglik>
EssResult ess_update(const Eigen::VectorXd& gamma, const Eigen::MatrixXd& chol_lower,
                     Loglik&& loglik, RngStream& rng) {
  const Eigen::Index p = gamma.size();
  if (chol_lower.rows() != p || chol_lower.cols() != p) {
    throw std::invalid_argument("ess_update: factor dimension mismatch");
  }

  const double loglik_cur = loglik(gamma);
  if (!std::isfinite(loglik_cur)) {
    throw InvalidState("ess_update: log-likelihood not finite at current state");
  }

  Eigen::VectorXd z(p);
  for (Eigen::Index j = 0; j < p; ++j) z[j] = rng.normal();
  const Eigen::VectorXd aux = chol_lower.template triangularView<Eigen::Lower>() * z;

  const double log_threshold = loglik_cur + std::log(rng.uniform01());

  constexpr double tau = 2.0 * std::numbers::pi;
  double theta = rng.uniform(0.0, tau);
  double theta_min = theta - tau;
  double theta_max = theta;

  int proposals = 0;
  for (;;) {
    ++proposals;
    Eigen::VectorXd proposal = gamma * std::cos(theta) + aux * std::sin(theta);
    const double ll = loglik(proposal);
    if (ll > log_threshold) {
      return {std::move(proposal), ll, proposals};
    }
    if (theta < 0.0) {
      theta_min = theta;
    } else {
      theta_max = theta;
    }
    theta = rng.uniform(theta_min, theta_max);
  }
}

struct ScalarSliceResult {
  double value;
  int doublings;
  int evaluations;
};

// One update of the doubling slice sampler (Neal 2003, Fig. 4-6): expand an
// initial interval of width cfg.initial_width by doubling until both ends
// leave the slice or the doubling budget is spent, then shrink, checking
// Neal's reversibility condition before accepting a point.
template <typename LogDensity>
ScalarSliceResult slice_update_scalar(double x0, LogDensity&& logdensity,
                                      const SliceConfig& cfg, RngStream& rng) {
  cfg.validate();
  const double fx0 = logdensity(x0);
  if (!std::isfinite(fx0)) {
    throw InvalidState("slice_update_scalar: log density not finite at current point");
  }

  int evals = 1;
  auto f = [&](double x) {
    ++evals;
    return logdensity(x);
  };

  const double log_y = fx0 + std::log(rng.uniform01());
  const double w = cfg.initial_width;

  double left = x0 - w * rng.uniform01();
  double right = left + w;
  double f_left = f(left);
  double f_right = f(right);

  int doublings = 0;
  while (doublings < cfg.max_doublings && (f_left > log_y || f_right > log_y)) {
    if (rng.uniform01() < 0.5) {
      left -= (right - left);
      f_left = f(left);
    } else {
      right += (right - left);
      f_right = f(right);
    }
    ++doublings;
  }

  // Acceptability test for points found by doubling (Neal 2003, Fig. 6).
  auto acceptable = [&](double x1) {
    double lo = left, hi = right;
    bool differ = false;
    while (hi - lo > 1.1 * w) {
      const double mid = (lo + hi) / 2.0;
      if ((x0 < mid && x1 >= mid) || (x0 >= mid && x1 < mid)) differ = true;
      if (x1 < mid) {
        hi = mid;
      } else {
        lo = mid;
      }
      if (differ && f(lo) <= log_y && f(hi) <= log_y) return false;
    }
    return true;
  };

  double lo = left, hi = right;
  for (int iter = 0; iter < 100000; ++iter) {
    const double x1 = rng.uniform(lo, hi);
    if (f(x1) > log_y && acceptable(x1)) {
      return {x1, doublings, evals};
    }
    if (x1 < x0) {
      lo = x1;
    } else {
      hi = x1;
    }
  }
  throw NumericalError("slice_update_scalar: shrinkage failed to terminate");
}

struct SweepStats {
  long long ess_proposals = 0;
  long long gamma0_evals = 0;
  long long lambda_evals = 0;
  long long sweeps = 0;
};

// gamma0 | rest: Gaussian prior times the collapsed likelihood, which is a
// step function of gamma0 (it changes only when the threshold crosses an
// entry of gamma). The slice sampler handles the piecewise-constant target.
template <typename Likelihood>
McmcState update_gamma0(McmcState state, const Likelihood& lik,
                        const Hyperparams& hyper, const SliceConfig& cfg,
                        RngStream& rng, SweepStats* stats = nullptr) {
  auto target = [&](double g0) {
    if (!std::isfinite(g0)) return -std::numeric_limits<double>::infinity();
    return log_normal_pdf(g0, hyper.mu_gamma, hyper.v_gamma) +
           lik.log_ml(inclusion_mask(state.gamma, g0), state.lambda, state.nu);
  };
  const auto res = slice_update_scalar(state.gamma0, target, cfg, rng);
  if (stats) stats->gamma0_evals += res.evaluations;
  state.gamma0 = res.value;
  return state;
}

// lambda | rest, sampled as t = log(lambda) so positivity is structural.
// Target includes the log-Jacobian: log Gam(e^t | a, b) + t + log ML.
template <typename Likelihood>
McmcState update_lambda(McmcState state, const Likelihood& lik,
                        const Hyperparams& hyper, const SliceConfig& cfg,
                        RngStream& rng, SweepStats* stats = nullptr) {
  const InclusionMask mask = inclusion_mask(state.gamma, state.gamma0);
  auto target = [&](double t) {
    if (!std::isfinite(t)) return -std::numeric_limits<double>::infinity();
    const double lam = std::exp(t);
    if (lam <= 0.0 || !std::isfinite(lam)) {
      return -std::numeric_limits<double>::infinity();
    }
    return hyper.a_lambda * t - hyper.b_lambda * lam +
           lik.log_ml(mask, lam, state.nu);
  };
  const auto res = slice_update_scalar(std::log(state.lambda), target, cfg, rng);
  if (stats) stats->lambda_evals += res.evaluations;
  state.lambda = std::exp(res.value);
  return state;
}

// nu | rest is conjugate: Gam(a_nu + n/2, b_nu + q/2) with q the quadratic
// form of the collapsed covariance. Exact Gibbs draw, no tuning.
template <typename Likelihood>
McmcState update_nu(McmcState state, const Likelihood& lik,
                    const Hyperparams& hyper, RngStream& rng) {
  const InclusionMask mask = inclusion_mask(state.gamma, state.gamma0);
  const NuPosterior post = lik.nu_posterior(mask, state.lambda, hyper);
  state.nu = rng.gamma(post.a, post.b);
  return state;
}

// One full sweep in the order gamma (ESS), gamma0, lambda, nu.
template <typename Likelihood>
McmcState sweep(McmcState state, const Likelihood& lik, const StructureKernel& kernel,
                const Hyperparams& hyper, const SliceConfig& gamma0_cfg,
                const SliceConfig& lambda_cfg, RngStream& rng,
                SweepStats* stats = nullptr) {
  auto gamma_loglik = [&](const Eigen::VectorXd& g) {
    return lik.log_ml(inclusion_mask(g, state.gamma0), state.lambda, state.nu);
  };
  auto ess = ess_update(state.gamma, kernel.chol, gamma_loglik, rng);
  state.gamma = std::move(ess.gamma);
  if (stats) stats->ess_proposals += ess.proposals_tried;

  state = update_gamma0(std::move(state), lik, hyper, gamma0_cfg, rng, stats);
  state = update_lambda(std::move(state), lik, hyper, lambda_cfg, rng, stats);
  state = update_nu(std::move(state), lik, hyper, rng);
  if (stats) ++stats->sweeps;
  return state;
}

}  // namespace bssr
