#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "bssr/errors.hpp"

namespace bssr {

// Positive definite predictor-similarity matrix with unit diagonal, plus its
// lower Cholesky factor. Immutable after construction; shareable across
// threads.
struct StructureKernel {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd chol;  // lower triangular, chol * chol^T == sigma
  double jitter_applied = 0.0;

  int p() const { return static_cast<int>(sigma.rows()); }

  // Enforces the emission contract: symmetry, unit diagonal, and a Cholesky
  // factor that reconstructs sigma.
  void check(double sym_tol = 1e-12, double diag_tol = 1e-12,
             double recon_tol = 1e-8) const {
    const int n = p();
    if (chol.rows() != n || chol.cols() != n) {
      throw NumericalError("StructureKernel: factor dimension mismatch");
    }
    for (int i = 0; i < n; ++i) {
      if (std::fabs(sigma(i, i) - 1.0) > diag_tol) {
        throw NumericalError("StructureKernel: diagonal entry " + std::to_string(i) +
                             " differs from 1");
      }
      for (int j = 0; j < i; ++j) {
        if (std::fabs(sigma(i, j) - sigma(j, i)) > sym_tol) {
          throw NumericalError("StructureKernel: asymmetry at (" + std::to_string(i) +
                               "," + std::to_string(j) + ")");
        }
      }
    }
    const double resid = (chol * chol.transpose() - sigma).cwiseAbs().maxCoeff();
    if (!(resid < recon_tol)) {
      throw NumericalError("StructureKernel: Cholesky reconstruction residual " +
                           std::to_string(resid));
    }
  }
};

inline constexpr double kDefaultKernelJitter = 1e-6;

// Adds diagonal jitter eps*I at eps = base, 10*base, ..., 1e6*base, rescales
// to unit diagonal, and accepts the first level whose Cholesky succeeds.
// Records the accepted level in jitter_applied.
inline StructureKernel ensure_pd(const Eigen::MatrixXd& sigma,
                                 double base_jitter = kDefaultKernelJitter) {
  const int n = static_cast<int>(sigma.rows());
  if (sigma.cols() != n || n < 1) {
    throw std::invalid_argument("ensure_pd: sigma must be square and non-empty");
  }
  if (!(base_jitter > 0)) {
    throw std::invalid_argument("ensure_pd: base jitter must be positive");
  }
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) {
    throw std::invalid_argument("ensure_pd: sigma is not symmetric (max asymmetry " +
                                std::to_string(asym) + ")");
  }

  std::vector<double> tried;
  for (int attempt = 0; attempt <= 6; ++attempt) {
    const double eps = base_jitter * std::pow(10.0, attempt);
    tried.push_back(eps);

    Eigen::MatrixXd work = (sigma + sigma.transpose()) / 2.0;
    work.diagonal().array() += eps;

    Eigen::VectorXd d = work.diagonal();
    if ((d.array() <= 0.0).any()) continue;
    const Eigen::VectorXd s = d.array().rsqrt();
    work = s.asDiagonal() * work * s.asDiagonal();
    work.diagonal().setOnes();

    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      StructureKernel k;
      k.sigma = std::move(work);
      k.chol = llt.matrixL();
      k.jitter_applied = eps;
      k.check();
      return k;
    }
  }
  throw NumericalError("ensure_pd: Cholesky failed at all jitter levels", tried);
}

// Sigma = I_p. Reduces the model to unstructured sparse regression.
inline StructureKernel identity_kernel(int p, double base_jitter = kDefaultKernelJitter) {
  if (p < 1) throw std::invalid_argument("identity_kernel: p >= 1 required");
  return ensure_pd(Eigen::MatrixXd::Identity(p, p), base_jitter);
}

// Sigma_jk = |corr(X_j, X_k)|. X may be a reference panel rather than the
// fitted predictor matrix, as long as the column count matches the model's p.
inline StructureKernel correlation_kernel(const Eigen::MatrixXd& X,
                                          double base_jitter = kDefaultKernelJitter) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n < 2 || p < 1) throw std::invalid_argument("correlation_kernel: need n >= 2, p >= 1");

  Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
  Eigen::VectorXd norms(p);
  for (int j = 0; j < p; ++j) {
    norms[j] = centered.col(j).norm();
    if (!(norms[j] > 0.0)) {
      throw std::invalid_argument("correlation_kernel: column " + std::to_string(j) +
                                  " has zero variance");
    }
  }
  Eigen::MatrixXd sigma(p, p);
  for (int j = 0; j < p; ++j) {
    sigma(j, j) = 1.0;
    for (int k = 0; k < j; ++k) {
      const double r = centered.col(j).dot(centered.col(k)) / (norms[j] * norms[k]);
      const double a = std::min(std::fabs(r), 1.0);
      sigma(j, k) = a;
      sigma(k, j) = a;
    }
  }
  return ensure_pd(sigma, base_jitter);
}

// Sigma = X^T X rescaled to unit diagonal. The rescaling keeps the
// unit-diagonal convention that the prior-inclusion formulas assume.
inline StructureKernel covariance_kernel(const Eigen::MatrixXd& X,
                                         double base_jitter = kDefaultKernelJitter) {
  const int p = static_cast<int>(X.cols());
  if (p < 1) throw std::invalid_argument("covariance_kernel: need p >= 1");
  Eigen::MatrixXd g = X.transpose() * X;
  for (int j = 0; j < p; ++j) {
    if (!(g(j, j) > 0.0)) {
      throw std::invalid_argument("covariance_kernel: column " + std::to_string(j) +
                                  " is identically zero");
    }
  }
  const Eigen::VectorXd s = g.diagonal().array().rsqrt();
  g = s.asDiagonal() * g * s.asDiagonal();
  return ensure_pd(g, base_jitter);
}

// Block-constant kernel: 1 on the diagonal, rho within a group, 0 across
// groups. Positive definite for rho in [0, 1).
inline StructureKernel block_kernel(const std::vector<int>& groups, double rho,
                                    double base_jitter = kDefaultKernelJitter) {
  const int p = static_cast<int>(groups.size());
  if (p < 1) throw std::invalid_argument("block_kernel: need p >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::invalid_argument("block_kernel: rho must lie in [0, 1)");
  }
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    sigma(j, j) = 1.0;
    for (int k = 0; k < j; ++k) {
      if (groups[j] == groups[k]) {
        sigma(j, k) = rho;
        sigma(k, j) = rho;
      }
    }
  }
  return ensure_pd(sigma, base_jitter);
}

}  // namespace bssr
