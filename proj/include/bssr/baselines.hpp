#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "bssr/model.hpp"

namespace bssr {

struct FsrResult {
  std::vector<int> selected;        // in acceptance order
  Eigen::VectorXd coefficients;     // final least-squares fit, one per selected
  double intercept = 0.0;
  std::vector<double> bic_trace;    // intercept-only BIC, then one per accepted step
  std::vector<int> skipped;         // candidates dropped for rank deficiency
};

namespace detail {

// Least squares on the intercept-plus-subset design via the normal
// equations. Returns false when the subset Gram is not positive definite.
inline bool subset_least_squares(const Eigen::MatrixXd& gram_aug,
                                 const Eigen::VectorXd& xty_aug, double yty,
                                 const std::vector<int>& cols,  // 0 = intercept, j+1 = predictor j
                                 Eigen::VectorXd& coef, double& rss) {
  const int m = static_cast<int>(cols.size());
  Eigen::MatrixXd G(m, m);
  Eigen::VectorXd h(m);
  for (int a = 0; a < m; ++a) {
    h[a] = xty_aug[cols[a]];
    for (int b = 0; b <= a; ++b) {
      G(a, b) = gram_aug(cols[a], cols[b]);
      G(b, a) = G(a, b);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) return false;
  coef = llt.solve(h);
  // Near-singular Grams can slip through LLT; reject solves that do not
  // actually satisfy the normal equations.
  if ((G * coef - h).norm() > 1e-8 * (h.norm() + 1.0)) return false;
  rss = std::max(0.0, yty - coef.dot(h));
  return true;
}

}  // namespace detail

// Forward stepwise regression with BIC stopping. Starting from the
// intercept-only model, each round refits with every excluded predictor
// added and accepts the one minimizing BIC = n log(RSS/n) + k log(n)
// (k counts the intercept) if it strictly improves; ties go to the lowest
// column index. Rank-deficient candidate designs are skipped and recorded.
inline FsrResult forward_stepwise_bic(const Dataset& data) {
  data.validate();
  const int n = data.n();
  const int p = data.p();
  if (n <= 2) throw std::invalid_argument("forward_stepwise_bic: n > 2 required");

  // Gram of [1, X] so every candidate fit is a small subset solve.
  Eigen::MatrixXd gram_aug(p + 1, p + 1);
  gram_aug(0, 0) = static_cast<double>(n);
  const Eigen::VectorXd xt1 = data.X.colwise().sum();
  gram_aug.block(0, 1, 1, p) = xt1.transpose();
  gram_aug.block(1, 0, p, 1) = xt1;
  gram_aug.block(1, 1, p, p) = data.X.transpose() * data.X;
  Eigen::VectorXd xty_aug(p + 1);
  xty_aug[0] = data.y.sum();
  xty_aug.tail(p) = data.X.transpose() * data.y;
  const double yty = data.y.squaredNorm();
  const double logn = std::log(static_cast<double>(n));

  auto bic_of = [&](double rss, int k) {
    return n * std::log(rss / n) + k * logn;
  };

  FsrResult result;
  std::vector<int> cols{0};  // active design, intercept first
  Eigen::VectorXd coef;
  double rss;
  detail::subset_least_squares(gram_aug, xty_aug, yty, cols, coef, rss);
  double current_bic = bic_of(rss, 1);
  result.bic_trace.push_back(current_bic);

  std::vector<std::uint8_t> in_model(p, 0);
  for (;;) {
    int best_j = -1;
    double best_bic = current_bic;
    for (int j = 0; j < p; ++j) {
      if (in_model[j]) continue;
      cols.push_back(j + 1);
      Eigen::VectorXd cand_coef;
      double cand_rss;
      const bool ok = detail::subset_least_squares(gram_aug, xty_aug, yty, cols,
                                                   cand_coef, cand_rss);
      cols.pop_back();
      if (!ok) {
        result.skipped.push_back(j);
        continue;
      }
      const double cand_bic = bic_of(cand_rss, static_cast<int>(cols.size()) + 1);
      if (cand_bic < best_bic) {
        best_bic = cand_bic;
        best_j = j;
      }
    }
    if (best_j < 0) break;

    in_model[best_j] = 1;
    cols.push_back(best_j + 1);
    result.selected.push_back(best_j);
    current_bic = best_bic;
    result.bic_trace.push_back(current_bic);
  }

  detail::subset_least_squares(gram_aug, xty_aug, yty, cols, coef, rss);
  result.intercept = coef[0];
  result.coefficients = coef.tail(static_cast<int>(result.selected.size()));
  return result;
}

// Scatter |coefficient| over the full predictor range; unselected
// predictors score 0. This is the score vector the evaluation pipeline
// thresholds for FSR.
inline Eigen::VectorXd fsr_scores(const FsrResult& result, int p) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(p);
  for (std::size_t i = 0; i < result.selected.size(); ++i) {
    s[result.selected[i]] = std::fabs(result.coefficients[static_cast<int>(i)]);
  }
  return s;
}

}  // namespace bssr
