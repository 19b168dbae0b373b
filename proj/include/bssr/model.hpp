#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bssr/errors.hpp"
#include "bssr/math.hpp"

namespace bssr {

// A regression instance: n samples, p predictors. Genotype use encodes X
// entries as minor-allele counts {0,1,2}, but any real matrix is accepted.
struct Dataset {
  Eigen::MatrixXd X;  // n x p
  Eigen::VectorXd y;  // n

  Dataset() = default;
  Dataset(Eigen::MatrixXd X_, Eigen::VectorXd y_)
      : X(std::move(X_)), y(std::move(y_)) {
    validate();
  }

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }

  void validate() const {
    if (X.rows() < 2) throw std::invalid_argument("Dataset: need n >= 2");
    if (X.cols() < 1) throw std::invalid_argument("Dataset: need p >= 1");
    if (y.size() != X.rows()) {
      throw std::invalid_argument("Dataset: y length must match rows of X");
    }
    if (!X.allFinite()) throw std::invalid_argument("Dataset: X has non-finite entries");
    if (!y.allFinite()) throw std::invalid_argument("Dataset: y has non-finite entries");
  }
};

// Prior hyperparameters: gamma priors on the residual precision nu and the
// inverse squared slab scale lambda, Gaussian prior on the probit threshold.
struct Hyperparams {
  double a_nu = 1.0;
  double b_nu = 1.0;
  double a_lambda = 1.0;
  double b_lambda = 1.0;
  double mu_gamma = 0.0;
  double v_gamma = 1.0;

  void validate() const {
    if (!(a_nu > 0 && b_nu > 0 && a_lambda > 0 && b_lambda > 0)) {
      throw std::invalid_argument("Hyperparams: gamma prior parameters must be positive");
    }
    if (!(v_gamma > 0)) throw std::invalid_argument("Hyperparams: v_gamma must be positive");
    if (!std::isfinite(mu_gamma)) throw std::invalid_argument("Hyperparams: mu_gamma must be finite");
  }

  // Weakly informative defaults with the threshold prior centered so that the
  // prior expected number of included predictors is k0. k0 is clamped away
  // from {0, p}, where the quantile would diverge.
  static Hyperparams defaults(int p, double k0 = -1.0) {
    if (p < 1) throw std::invalid_argument("Hyperparams::defaults: p >= 1 required");
    if (k0 < 0.0) k0 = std::min(5.0, static_cast<double>(p));
    k0 = std::min(std::max(k0, 0.5), p - 0.5);
    Hyperparams h;
    h.mu_gamma = norm_ppf(1.0 - k0 / static_cast<double>(p));
    return h;
  }
};

// One MCMC state. The inclusion indicators are derived from (gamma, gamma0),
// never stored.
struct McmcState {
  Eigen::VectorXd gamma;  // latent field, length p
  double gamma0 = 0.0;    // probit threshold
  double lambda = 1.0;    // inverse squared global slab scale
  double nu = 1.0;        // residual precision

  void validate() const {
    if (!gamma.allFinite()) throw std::invalid_argument("McmcState: gamma has non-finite entries");
    if (!std::isfinite(gamma0)) throw std::invalid_argument("McmcState: gamma0 not finite");
    if (!(lambda > 0) || !std::isfinite(lambda)) throw std::invalid_argument("McmcState: lambda must be positive");
    if (!(nu > 0) || !std::isfinite(nu)) throw std::invalid_argument("McmcState: nu must be positive");
  }
};

// Diagonal of the degenerate slab covariance: included[j] <=> gamma_j > gamma0.
struct InclusionMask {
  std::vector<std::uint8_t> included;

  int size() const { return static_cast<int>(included.size()); }

  int count() const {
    int k = 0;
    for (auto b : included) k += b != 0;
    return k;
  }

  std::vector<int> indices() const {
    std::vector<int> idx;
    idx.reserve(included.size());
    for (int j = 0; j < size(); ++j) {
      if (included[j]) idx.push_back(j);
    }
    return idx;
  }

  bool operator==(const InclusionMask& other) const { return included == other.included; }
};

// Thresholds the latent field. Strict inequality: gamma_j == gamma0 excludes.
inline InclusionMask inclusion_mask(const Eigen::VectorXd& gamma, double gamma0) {
  if (!gamma.allFinite() || !std::isfinite(gamma0)) {
    throw std::invalid_argument("inclusion_mask: inputs must be finite");
  }
  InclusionMask m;
  m.included.resize(gamma.size());
  for (Eigen::Index j = 0; j < gamma.size(); ++j) {
    m.included[j] = gamma[j] > gamma0 ? 1 : 0;
  }
  return m;
}

// Marginal prior P(beta_j != 0) = 1 - Phi(gamma0 / sqrt(sigma_jj)). With the
// unit-diagonal kernels this library emits, sigma_jj = 1.
inline double prior_inclusion_probability(double sigma_jj, double gamma0) {
  if (!(sigma_jj > 0)) throw std::invalid_argument("prior_inclusion_probability: sigma_jj must be positive");
  if (std::isnan(gamma0)) throw std::invalid_argument("prior_inclusion_probability: gamma0 is NaN");
  return 1.0 - norm_cdf(gamma0 / std::sqrt(sigma_jj));
}

// Prior expected number of included predictors under a unit-diagonal kernel.
inline double expected_included(int p, double gamma0) {
  if (p < 1) throw std::invalid_argument("expected_included: p >= 1 required");
  return static_cast<double>(p) * (1.0 - norm_cdf(gamma0));
}

enum class MlPath { kAuto, kLowRank, kDense };

struct NuPosterior {
  double a;  // a_nu + n/2
  double b;  // b_nu + quadratic form / 2
};

namespace detail {

// In-place lower Cholesky of the leading m x m block. Returns false on a
// non-positive pivot.
inline bool cholesky_in_place(Eigen::MatrixXd& A, int m) {
  for (int j = 0; j < m; ++j) {
    double d = A(j, j);
    for (int k = 0; k < j; ++k) d -= A(j, k) * A(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    A(j, j) = d;
    for (int i = j + 1; i < m; ++i) {
      double s = A(i, j);
      for (int k = 0; k < j; ++k) s -= A(i, k) * A(j, k);
      A(i, j) = s / d;
    }
  }
  return true;
}

// Solves L w = v for the leading m entries, overwriting v.
inline void forward_solve_in_place(const Eigen::MatrixXd& L, Eigen::VectorXd& v, int m) {
  for (int i = 0; i < m; ++i) {
    double s = v[i];
    for (int k = 0; k < i; ++k) s -= L(i, k) * v[k];
    v[i] = s / L(i, i);
  }
}

}  // namespace detail

// Evaluator of the collapsed response density
//
//   N(y | 0, nu^{-1} (lambda^{-1} (1 1^T + X_S X_S^T) + I_n))
//
// where S is the included-column set, with the intercept and the regression
// weights integrated out. Two algebraically identical routes are provided:
// a dense n x n factorization, and a low-rank route that works in the
// (k+1)-dimensional space spanned by [1_n, X_S] via the matrix inversion and
// determinant lemmas. kAuto picks low-rank when k+1 < n.
//
// For p up to `gram_cache_max_p`, X^T X is precomputed once so that a
// low-rank evaluation costs O(k^3) with no O(n) work; this is the hot loop
// of every sampler sweep. Evaluations are const and thread-safe (scratch
// space is thread-local).
class CollapsedMarginal {
 public:
  explicit CollapsedMarginal(Dataset data, int gram_cache_max_p = 2048)
      : data_(std::move(data)) {
    data_.validate();
    const int n = data_.n();
    xty_ = data_.X.transpose() * data_.y;
    xt1_ = data_.X.transpose() * Eigen::VectorXd::Ones(n);
    yty_ = data_.y.squaredNorm();
    sum_y_ = data_.y.sum();
    if (data_.p() <= gram_cache_max_p) {
      gram_ = data_.X.transpose() * data_.X;
      has_gram_ = true;
    }
  }

  const Dataset& dataset() const { return data_; }
  int n() const { return data_.n(); }
  int p() const { return data_.p(); }

  double log_ml(const InclusionMask& mask, double lambda, double nu,
                MlPath path = MlPath::kAuto) const {
    check_args(mask, lambda, nu);
    const auto core = compute_core(mask, lambda, path);
    const int n = data_.n();
    return -0.5 * n * kLog2Pi + 0.5 * n * std::log(nu) - 0.5 * core.logdet_a -
           0.5 * nu * core.quad;
  }

  // y^T (lambda^{-1}(1 1^T + X_S X_S^T) + I)^{-1} y, the quadratic form of
  // the conjugate nu update.
  double quad_form(const InclusionMask& mask, double lambda,
                   MlPath path = MlPath::kAuto) const {
    check_args(mask, lambda, 1.0);
    return compute_core(mask, lambda, path).quad;
  }

  NuPosterior nu_posterior(const InclusionMask& mask, double lambda,
                           const Hyperparams& hyper) const {
    return {hyper.a_nu + 0.5 * data_.n(),
            hyper.b_nu + 0.5 * quad_form(mask, lambda)};
  }

 private:
  struct Core {
    double logdet_a;  // log det(lambda^{-1}(1 1^T + X_S X_S^T) + I_n)
    double quad;      // y^T A^{-1} y
  };

  void check_args(const InclusionMask& mask, double lambda, double nu) const {
    if (mask.size() != data_.p()) {
      throw std::invalid_argument("CollapsedMarginal: mask length != p");
    }
    if (!(lambda > 0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("CollapsedMarginal: lambda must be positive and finite");
    }
    if (!(nu > 0) || !std::isfinite(nu)) {
      throw std::invalid_argument("CollapsedMarginal: nu must be positive and finite");
    }
  }

  Core compute_core(const InclusionMask& mask, double lambda, MlPath path) const {
    const int n = data_.n();
    thread_local std::vector<int> idx;
    idx.clear();
    for (int j = 0; j < mask.size(); ++j) {
      if (mask.included[j]) idx.push_back(j);
    }
    const int m = static_cast<int>(idx.size()) + 1;

    if (path == MlPath::kAuto) {
      path = (m < n) ? MlPath::kLowRank : MlPath::kDense;
    }
    return (path == MlPath::kLowRank) ? low_rank_core(idx, lambda)
                                      : dense_core(idx, lambda);
  }

  // M = I_m + lambda^{-1} B^T B with B = [1_n, X_S]. Then
  // logdet A = logdet M and y^T A^{-1} y = y^T y - lambda^{-1} |L^{-1} B^T y|^2.
  Core low_rank_core(const std::vector<int>& idx, double lambda) const {
    const int k = static_cast<int>(idx.size());
    const int m = k + 1;
    const double inv_lambda = 1.0 / lambda;
    const int n = data_.n();

    thread_local Eigen::MatrixXd M;
    thread_local Eigen::VectorXd v;
    if (M.rows() < m) {
      M.resize(m, m);
      v.resize(m);
    } else if (v.size() < m) {
      v.resize(m);
    }

    M(0, 0) = 1.0 + inv_lambda * n;
    v[0] = sum_y_;
    for (int a = 0; a < k; ++a) {
      const int ja = idx[a];
      M(a + 1, 0) = inv_lambda * xt1_[ja];
      v[a + 1] = xty_[ja];
      if (has_gram_) {
        for (int b = 0; b <= a; ++b) {
          M(a + 1, b + 1) = inv_lambda * gram_(ja, idx[b]);
        }
      } else {
        const auto col_a = data_.X.col(ja);
        for (int b = 0; b <= a; ++b) {
          M(a + 1, b + 1) = inv_lambda * col_a.dot(data_.X.col(idx[b]));
        }
      }
      M(a + 1, a + 1) += 1.0;
    }

    if (!detail::cholesky_in_place(M, m)) {
      throw NumericalError("CollapsedMarginal: low-rank Cholesky failed");
    }
    double logdet = 0.0;
    for (int i = 0; i < m; ++i) logdet += std::log(M(i, i));
    logdet *= 2.0;

    detail::forward_solve_in_place(M, v, m);
    double w2 = 0.0;
    for (int i = 0; i < m; ++i) w2 += v[i] * v[i];
    return {logdet, yty_ - inv_lambda * w2};
  }

  Core dense_core(const std::vector<int>& idx, double lambda) const {
    const int n = data_.n();
    const double inv_lambda = 1.0 / lambda;

    thread_local Eigen::MatrixXd A;
    thread_local Eigen::VectorXd w;
    if (A.rows() < n) {
      A.resize(n, n);
      w.resize(n);
    } else if (w.size() < n) {
      w.resize(n);
    }

    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = 1.0;  // 1_n 1_n^T
        for (int c : idx) s += data_.X(i, c) * data_.X(j, c);
        A(i, j) = inv_lambda * s + (i == j ? 1.0 : 0.0);
      }
    }

    if (!detail::cholesky_in_place(A, n)) {
      throw NumericalError("CollapsedMarginal: dense Cholesky failed");
    }
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += std::log(A(i, i));
    logdet *= 2.0;

    for (int i = 0; i < n; ++i) w[i] = data_.y[i];
    detail::forward_solve_in_place(A, w, n);
    double w2 = 0.0;
    for (int i = 0; i < n; ++i) w2 += w[i] * w[i];
    return {logdet, w2};
  }

  Dataset data_;
  Eigen::VectorXd xty_, xt1_;
  Eigen::MatrixXd gram_;
  double yty_ = 0.0, sum_y_ = 0.0;
  bool has_gram_ = false;
};

// One-shot convenience wrapper around CollapsedMarginal.
inline double log_marginal_likelihood(const Dataset& data, const InclusionMask& mask,
                                      double lambda, double nu,
                                      MlPath path = MlPath::kAuto) {
  return CollapsedMarginal(data, 0).log_ml(mask, lambda, nu, path);
}

// Likelihood stand-in whose value is constant in every argument. Substituting
// it for CollapsedMarginal turns the sweep into a prior sampler, which is how
// the Geweke-style prior-recovery checks are run.
struct ConstantLikelihood {
  double value = 0.0;

  double log_ml(const InclusionMask&, double, double) const { return value; }

  NuPosterior nu_posterior(const InclusionMask&, double,
                           const Hyperparams& hyper) const {
    return {hyper.a_nu, hyper.b_nu};
  }
};

// log N(gamma | 0, Sigma) given the lower Cholesky factor of Sigma.
inline double log_gaussian_prior(const Eigen::VectorXd& gamma,
                                 const Eigen::MatrixXd& chol_lower) {
  const Eigen::Index p = gamma.size();
  Eigen::VectorXd w = chol_lower.triangularView<Eigen::Lower>().solve(gamma);
  double logdet_half = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) logdet_half += std::log(chol_lower(i, i));
  return -0.5 * p * kLog2Pi - logdet_half - 0.5 * w.squaredNorm();
}

// Joint log density of (y, state): collapsed marginal likelihood plus the
// log priors of gamma, gamma0, lambda and nu. Used for MAP tracking.
template <typename Likelihood>
double log_joint(const McmcState& state, const Likelihood& lik,
                 const Eigen::MatrixXd& kernel_chol_lower,
                 const Hyperparams& hyper) {
  state.validate();
  const InclusionMask mask = inclusion_mask(state.gamma, state.gamma0);
  return lik.log_ml(mask, state.lambda, state.nu) +
         log_gaussian_prior(state.gamma, kernel_chol_lower) +
         log_normal_pdf(state.gamma0, hyper.mu_gamma, hyper.v_gamma) +
         log_gamma_pdf(state.lambda, hyper.a_lambda, hyper.b_lambda) +
         log_gamma_pdf(state.nu, hyper.a_nu, hyper.b_nu);
}

}  // namespace bssr
