#pragma once

// Test-side reference computations, deliberately independent of the library's
// evaluation paths: brute-force dense Gaussians, exhaustive mask enumeration
// with quadrature over the scale parameter, Monte Carlo prior mask masses,
// and batch-mean Monte Carlo standard errors for autocorrelated chains.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bssr/math.hpp"
#include "bssr/model.hpp"
#include "bssr/rng.hpp"

namespace oracle {

inline bssr::InclusionMask mask_from_bits(unsigned bits, int p) {
  bssr::InclusionMask m;
  m.included.resize(p);
  for (int j = 0; j < p; ++j) m.included[j] = (bits >> j) & 1u;
  return m;
}

inline unsigned bits_from_mask(const bssr::InclusionMask& m) {
  unsigned bits = 0;
  for (int j = 0; j < m.size(); ++j) {
    if (m.included[j]) bits |= 1u << j;
  }
  return bits;
}

// Straight dense evaluation of log N(y | 0, nu^{-1}(lambda^{-1}(1 1^T +
// X_S X_S^T) + I_n)) built column by column with Eigen's own solver.
inline double dense_log_ml(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const bssr::InclusionMask& mask, double lambda, double nu) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd inner = Eigen::MatrixXd::Ones(n, n);
  for (int j = 0; j < mask.size(); ++j) {
    if (mask.included[j]) inner += X.col(j) * X.col(j).transpose();
  }
  Eigen::MatrixXd cov = (inner / lambda + Eigen::MatrixXd::Identity(n, n)) / nu;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("oracle: dense LLT failed");
  const Eigen::MatrixXd L = llt.matrixL();
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += std::log(L(i, i));
  const Eigen::VectorXd w = llt.matrixL().solve(y);
  return -0.5 * n * bssr::kLog2Pi - logdet - 0.5 * w.squaredNorm();
}

// Eigen-decomposition of (1 1^T + X_S X_S^T) so the nu-integrated likelihood
// can be swept over a lambda grid in O(n) per grid point.
struct MaskSpectrum {
  Eigen::VectorXd eigs;   // eigenvalues of 1 1^T + X_S X_S^T
  Eigen::VectorXd proj2;  // squared components of y in the eigenbasis
};

inline MaskSpectrum mask_spectrum(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const bssr::InclusionMask& mask) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd inner = Eigen::MatrixXd::Ones(n, n);
  for (int j = 0; j < mask.size(); ++j) {
    if (mask.included[j]) inner += X.col(j) * X.col(j).transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
  MaskSpectrum s;
  s.eigs = es.eigenvalues();
  const Eigen::VectorXd proj = es.eigenvectors().transpose() * y;
  s.proj2 = proj.array().square();
  return s;
}

// log of integral over nu of N(y | 0, nu^{-1} A(lambda)) Gam(nu | a, b),
// which is available in closed form.
inline double log_ml_nu_integrated(const MaskSpectrum& s, double lambda, double a_nu,
                                   double b_nu) {
  const int n = static_cast<int>(s.eigs.size());
  double logdet = 0.0, quad = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = s.eigs[i] / lambda + 1.0;
    logdet += std::log(d);
    quad += s.proj2[i] / d;
  }
  return -0.5 * n * bssr::kLog2Pi - 0.5 * logdet + a_nu * std::log(b_nu) -
         std::lgamma(a_nu) + std::lgamma(a_nu + 0.5 * n) -
         (a_nu + 0.5 * n) * std::log(b_nu + 0.5 * quad);
}

// Monte Carlo prior mass of every inclusion mask under gamma ~ N(0, Sigma),
// gamma0 ~ N(mu, v). Indexed by mask bits.
inline std::vector<double> prior_mask_mass_mc(const Eigen::MatrixXd& chol_lower,
                                              double mu_gamma, double v_gamma,
                                              long long draws, std::uint64_t seed) {
  const int p = static_cast<int>(chol_lower.rows());
  if (p > 16) throw std::invalid_argument("prior_mask_mass_mc: p too large to enumerate");
  std::vector<double> mass(1u << p, 0.0);
  bssr::RngStream rng(seed);
  const double sd = std::sqrt(v_gamma);
  Eigen::VectorXd z(p);
  for (long long i = 0; i < draws; ++i) {
    for (int j = 0; j < p; ++j) z[j] = rng.normal();
    const Eigen::VectorXd g = chol_lower.triangularView<Eigen::Lower>() * z;
    const double g0 = mu_gamma + sd * rng.normal();
    unsigned bits = 0;
    for (int j = 0; j < p; ++j) {
      if (g[j] > g0) bits |= 1u << j;
    }
    mass[bits] += 1.0;
  }
  for (auto& m : mass) m /= static_cast<double>(draws);
  return mass;
}

inline double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Exhaustive posterior over the 2^p masks with lambda and nu both fixed:
// weight = prior mass * dense marginal likelihood.
inline std::vector<double> mask_posterior_fixed(const Eigen::MatrixXd& X,
                                                const Eigen::VectorXd& y,
                                                const std::vector<double>& prior_mass,
                                                double lambda, double nu) {
  const int p = static_cast<int>(X.cols());
  const unsigned nmask = 1u << p;
  std::vector<double> logw(nmask);
  for (unsigned b = 0; b < nmask; ++b) {
    logw[b] = prior_mass[b] > 0.0
                  ? std::log(prior_mass[b]) + dense_log_ml(X, y, mask_from_bits(b, p), lambda, nu)
                  : -std::numeric_limits<double>::infinity();
  }
  const double lse = log_sum_exp(logw);
  std::vector<double> post(nmask);
  for (unsigned b = 0; b < nmask; ++b) post[b] = std::exp(logw[b] - lse);
  return post;
}

// Exhaustive posterior over masks with nu integrated analytically and lambda
// integrated by trapezoid quadrature on t = log(lambda) against its gamma
// prior (density * Jacobian e^t).
inline std::vector<double> mask_posterior_integrated(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
    const std::vector<double>& prior_mass, const bssr::Hyperparams& hyper,
    int grid_points = 4000, double t_lo = -45.0, double t_hi = 10.0) {
  const int p = static_cast<int>(X.cols());
  const unsigned nmask = 1u << p;
  const double h = (t_hi - t_lo) / (grid_points - 1);

  std::vector<double> logw(nmask);
  std::vector<double> terms(grid_points);
  for (unsigned b = 0; b < nmask; ++b) {
    if (prior_mass[b] <= 0.0) {
      logw[b] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const MaskSpectrum spec = mask_spectrum(X, y, mask_from_bits(b, p));
    for (int i = 0; i < grid_points; ++i) {
      const double t = t_lo + i * h;
      const double lam = std::exp(t);
      double lt = log_ml_nu_integrated(spec, lam, hyper.a_nu, hyper.b_nu) +
                  bssr::log_gamma_pdf(lam, hyper.a_lambda, hyper.b_lambda) + t;
      if (i == 0 || i == grid_points - 1) lt -= std::log(2.0);  // trapezoid ends
      terms[i] = lt;
    }
    logw[b] = std::log(prior_mass[b]) + log_sum_exp(terms) + std::log(h);
  }
  const double lse = log_sum_exp(logw);
  std::vector<double> post(nmask);
  for (unsigned b = 0; b < nmask; ++b) post[b] = std::exp(logw[b] - lse);
  return post;
}

inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("total_variation: size mismatch");
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::fabs(a[i] - b[i]);
  return 0.5 * tv;
}

struct MomentEstimate {
  double mean;
  double se;  // batch-means standard error, valid for autocorrelated chains
};

inline MomentEstimate batch_mean_se(const std::vector<double>& x, int nbatches = 20) {
  const std::size_t n = x.size();
  if (n < static_cast<std::size_t>(2 * nbatches)) {
    throw std::invalid_argument("batch_mean_se: chain too short");
  }
  const std::size_t batch = n / nbatches;
  std::vector<double> means;
  for (int b = 0; b < nbatches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * batch; i < (b + 1) * batch; ++i) s += x[i];
    means.push_back(s / batch);
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= nbatches;
  double var = 0.0;
  for (double m : means) var += (m - grand) * (m - grand);
  var /= (nbatches - 1);
  return {grand, std::sqrt(var / nbatches)};
}

// Draws a genotype-style column in {0,1,2} that is guaranteed non-constant.
inline Eigen::MatrixXd random_genotype_matrix(int n, int p, bssr::RngStream& rng) {
  Eigen::MatrixXd X(n, p);
  for (int j = 0; j < p; ++j) {
    for (;;) {
      const double maf = rng.uniform(0.15, 0.5);
      for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        const double q0 = (1 - maf) * (1 - maf);
        X(i, j) = u < q0 ? 0.0 : (u < q0 + 2 * maf * (1 - maf) ? 1.0 : 2.0);
      }
      if ((X.col(j).array() != X(0, j)).any()) break;
    }
  }
  return X;
}

}  // namespace oracle
