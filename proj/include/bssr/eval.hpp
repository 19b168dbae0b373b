#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bssr/errors.hpp"
#include "bssr/rng.hpp"

namespace bssr {

// Per-predictor scores (PPI or |effect|) with the causal-only truth labels.
struct ScoredPredictors {
  Eigen::VectorXd scores;
  std::vector<std::uint8_t> truth;

  void validate() const {
    if (static_cast<std::size_t>(scores.size()) != truth.size()) {
      throw std::invalid_argument("ScoredPredictors: length mismatch");
    }
    if (!scores.allFinite()) {
      throw std::invalid_argument("ScoredPredictors: non-finite score");
    }
  }
};

struct PrPoint {
  double threshold;
  long long tp;
  long long fp;
  double precision;
  double recall;
};

// Pooled precision-recall curve: predictors from all replicates are ranked
// together and thresholds sweep the distinct score values (score >= t counts
// as called). Only simulated causal predictors count as true.
inline std::vector<PrPoint> pr_curve(const std::vector<ScoredPredictors>& scored) {
  long long total_causal = 0;
  std::vector<std::pair<double, std::uint8_t>> pool;
  for (const auto& s : scored) {
    s.validate();
    for (Eigen::Index j = 0; j < s.scores.size(); ++j) {
      pool.emplace_back(s.scores[j], s.truth[j]);
      total_causal += s.truth[j] != 0;
    }
  }
  if (total_causal == 0) {
    throw std::invalid_argument("pr_curve: no causal predictor in the pooled truth");
  }

  std::sort(pool.begin(), pool.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<PrPoint> points;
  long long tp = 0, fp = 0;
  const std::size_t m = pool.size();
  for (std::size_t i = 0; i < m; ++i) {
    tp += pool[i].second != 0;
    fp += pool[i].second == 0;
    if (i + 1 < m && pool[i + 1].first == pool[i].first) continue;  // flush per distinct score
    points.push_back({pool[i].first, tp, fp,
                      static_cast<double>(tp) / static_cast<double>(tp + fp),
                      static_cast<double>(tp) / static_cast<double>(total_causal)});
  }
  return points;
}

// Area under the PR curve as average precision: sum of precision weighted by
// recall increments, over points in descending-threshold order.
inline double auc_pr(const std::vector<PrPoint>& points) {
  double auc = 0.0;
  double prev_recall = 0.0;
  for (const auto& pt : points) {
    auc += (pt.recall - prev_recall) * pt.precision;
    prev_recall = pt.recall;
  }
  return auc;
}

// Uniform random permutation of the responses; the multiset is preserved.
inline Eigen::VectorXd permute_responses(const Eigen::VectorXd& y, RngStream& rng) {
  if (y.size() < 2) throw std::invalid_argument("permute_responses: n >= 2 required");
  std::vector<double> v(y.data(), y.data() + y.size());
  rng.shuffle(v);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

// Empirical FDR sweep. thresholds are stored descending; counts use the
// strict comparison score > c. perm_counts holds raw counts pooled over
// n_permutations permutations; the fdr column averages them, clips the
// ratio perm/real to [0,1], and is made monotone (non-increasing in the
// threshold) by a running maximum from the top so that a stricter threshold
// never reports a larger FDR.
struct FdrCurve {
  std::vector<double> thresholds;     // descending
  std::vector<long long> real_counts;
  std::vector<long long> perm_counts;
  int n_permutations = 1;
  std::vector<double> fdr;
};

inline FdrCurve empirical_fdr(const std::vector<double>& real_scores,
                              const std::vector<double>& perm_scores,
                              std::vector<double> thresholds,
                              int n_permutations = 1) {
  if (real_scores.empty() || perm_scores.empty()) {
    throw std::invalid_argument("empirical_fdr: empty score pool");
  }
  if (n_permutations < 1) {
    throw std::invalid_argument("empirical_fdr: n_permutations >= 1 required");
  }
  if (perm_scores.size() != real_scores.size() * static_cast<std::size_t>(n_permutations)) {
    throw std::invalid_argument(
        "empirical_fdr: permuted pool must hold n_permutations times as many scores as the real pool");
  }
  if (thresholds.empty()) {
    throw std::invalid_argument("empirical_fdr: no thresholds");
  }

  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<double> real_sorted = real_scores;
  std::vector<double> perm_sorted = perm_scores;
  std::sort(real_sorted.begin(), real_sorted.end());
  std::sort(perm_sorted.begin(), perm_sorted.end());

  auto count_above = [](const std::vector<double>& sorted, double c) {
    return static_cast<long long>(sorted.end() -
                                  std::upper_bound(sorted.begin(), sorted.end(), c));
  };

  FdrCurve curve;
  curve.thresholds = std::move(thresholds);
  curve.n_permutations = n_permutations;
  double running = 0.0;
  for (double c : curve.thresholds) {
    const long long rc = count_above(real_sorted, c);
    const long long pc = count_above(perm_sorted, c);
    curve.real_counts.push_back(rc);
    curve.perm_counts.push_back(pc);
    const double perm_avg = static_cast<double>(pc) / n_permutations;
    double ratio = perm_avg / std::max<long long>(1, rc);
    ratio = std::min(std::max(ratio, 0.0), 1.0);
    running = std::max(running, ratio);
    curve.fdr.push_back(running);
  }
  return curve;
}

// Smallest threshold whose fdr is at or below the target.
inline double threshold_for_fdr(const FdrCurve& curve, double target) {
  if (curve.thresholds.empty()) throw std::invalid_argument("threshold_for_fdr: empty curve");
  if (!(target >= 0.0)) throw std::invalid_argument("threshold_for_fdr: target must be non-negative");
  // fdr is non-decreasing along the descending-threshold vector, so the
  // qualifying thresholds form a prefix; take the last of them.
  for (std::size_t i = curve.thresholds.size(); i-- > 0;) {
    if (curve.fdr[i] <= target) return curve.thresholds[i];
  }
  throw NotFoundError("threshold_for_fdr: no threshold attains the target");
}

}  // namespace bssr
