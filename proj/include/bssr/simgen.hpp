#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "bssr/math.hpp"
#include "bssr/rng.hpp"

namespace bssr {

// Ground truth of a simulated trait. `causal` indexes columns of the matrix
// the trait is emitted with (the observed matrix); `removed` records original
// panel columns dropped by the tag-SNP protocol.
struct SimTruth {
  std::vector<int> causal;
  std::vector<double> effects;  // one per causal column
  std::vector<int> removed;
};

// Synthetic genotype panel: blocks of correlated SNPs standing in for
// LD structure, with per-column minor allele frequencies.
struct GenotypeSpec {
  int n = 300;
  int p = 200;
  int block_size = 10;
  double rho = 0.9;
  double maf_low = 0.1;
  double maf_high = 0.5;

  void validate() const {
    if (n < 2) throw std::invalid_argument("GenotypeSpec: n >= 2 required");
    if (p < 1) throw std::invalid_argument("GenotypeSpec: p >= 1 required");
    if (block_size < 1) throw std::invalid_argument("GenotypeSpec: block_size >= 1 required");
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("GenotypeSpec: rho must lie in [0, 1)");
    if (!(maf_low > 0.0 && maf_low <= maf_high && maf_high <= 0.5)) {
      throw std::invalid_argument("GenotypeSpec: maf range must satisfy 0 < low <= high <= 0.5");
    }
  }
};

// Draws an n x p matrix with entries in {0,1,2}: a latent Gaussian with
// block-constant correlation rho is thresholded at the Hardy-Weinberg
// quantiles implied by each column's minor allele frequency. Columns that
// come out constant are resampled (fresh frequency and idiosyncratic noise,
// shared block factors kept), up to 100 times each.
inline Eigen::MatrixXd simulate_genotypes(const GenotypeSpec& spec, RngStream& rng) {
  spec.validate();
  const int n = spec.n;
  const int p = spec.p;
  const int nblocks = (p + spec.block_size - 1) / spec.block_size;
  const double a = std::sqrt(spec.rho);
  const double b = std::sqrt(1.0 - spec.rho);

  Eigen::MatrixXd shared(n, nblocks);
  for (int i = 0; i < n; ++i) {
    for (int blk = 0; blk < nblocks; ++blk) shared(i, blk) = rng.normal();
  }

  Eigen::MatrixXd X(n, p);
  for (int j = 0; j < p; ++j) {
    const int blk = j / spec.block_size;
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double maf = rng.uniform(spec.maf_low, spec.maf_high);
      const double p_hom = (1.0 - maf) * (1.0 - maf);
      const double t0 = norm_ppf(p_hom);
      const double t1 = norm_ppf(p_hom + 2.0 * maf * (1.0 - maf));

      bool constant = true;
      double first = 0.0;
      for (int i = 0; i < n; ++i) {
        const double z = a * shared(i, blk) + b * rng.normal();
        const double g = z < t0 ? 0.0 : (z < t1 ? 1.0 : 2.0);
        X(i, j) = g;
        if (i == 0) {
          first = g;
        } else if (g != first) {
          constant = false;
        }
      }
      if (!constant) break;
      if (attempt == 99) {
        throw std::runtime_error("simulate_genotypes: column " + std::to_string(j) +
                                 " stayed constant after 100 retries");
      }
    }
  }
  return X;
}

// Rank-based projection onto standard normal quantiles: the value of rank r
// (ties get averaged ranks) maps to Phi^{-1}((r - 0.5)/n).
inline Eigen::VectorXd quantile_normalize(const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  if (n < 2) throw std::invalid_argument("quantile_normalize: n >= 2 required");
  if (!y.allFinite()) throw std::invalid_argument("quantile_normalize: non-finite input");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return y[i] < y[j]; });
  if (y[order.front()] == y[order.back()]) {
    throw std::invalid_argument("quantile_normalize: all values equal, ranks undefined");
  }

  Eigen::VectorXd out(n);
  int start = 0;
  while (start < n) {
    int stop = start + 1;
    while (stop < n && y[order[stop]] == y[order[start]]) ++stop;
    const double avg_rank = 0.5 * (start + 1 + stop);  // 1-based, averaged over the tie run
    const double q = norm_ppf((avg_rank - 0.5) / n);
    for (int i = start; i < stop; ++i) out[order[i]] = q;
    start = stop;
  }
  return out;
}

namespace detail {

// Beta(0.1, 0.1) pushed through 2b - 1: bimodal near the interval ends.
// Redraws on the (floating-point-only) event that the result rounds onto
// an endpoint, keeping effects strictly inside (-1, 1).
inline double draw_effect(RngStream& rng) {
  for (;;) {
    const double e = 2.0 * rng.beta(0.1, 0.1) - 1.0;
    if (e > -1.0 && e < 1.0) return e;
  }
}

}  // namespace detail

struct Sim1Result {
  Eigen::VectorXd y;
  SimTruth truth;
};

// The Sim1 protocol: q causal columns drawn uniformly from [q_min, q_max],
// effects from the rescaled Beta(0.1, 0.1), unit-noise linear trait, then
// quantile normalization.
inline Sim1Result sim1(const Eigen::MatrixXd& X, int q_min, int q_max, RngStream& rng) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (q_min < 1 || q_max < q_min) throw std::invalid_argument("sim1: need 1 <= q_min <= q_max");
  if (p < q_max) throw std::invalid_argument("sim1: p >= q_max required");
  if (n < 2) throw std::invalid_argument("sim1: n >= 2 required");

  const int q = q_min + static_cast<int>(rng.uniform_int(q_max - q_min + 1));
  std::vector<int> causal = rng.sample_without_replacement(p, q);
  std::sort(causal.begin(), causal.end());

  Sim1Result out;
  out.truth.causal = causal;
  out.truth.effects.resize(q);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < q; ++a) {
    out.truth.effects[a] = detail::draw_effect(rng);
    mean += out.truth.effects[a] * X.col(causal[a]);
  }
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = mean[i] + rng.normal();
  out.y = quantile_normalize(y);
  return out;
}

struct SimTagResult {
  Eigen::VectorXd y;
  Eigen::MatrixXd X_observed;
  SimTruth truth;                    // causal in observed coordinates, removed in panel coordinates
  std::vector<int> observed_to_full; // observed column -> original panel column
};

// The SimTag protocol: s causal columns (s drawn uniformly with s - r > 0),
// the trait generated from all of them, then r of the causal columns removed
// from the observed matrix so surviving correlated columns act as tags.
inline SimTagResult simtag(const Eigen::MatrixXd& X_full, int s_min, int s_max,
                           int r, RngStream& rng) {
  const int n = static_cast<int>(X_full.rows());
  const int p_full = static_cast<int>(X_full.cols());
  if (r < 0) throw std::invalid_argument("simtag: r >= 0 required");
  if (s_min < 1 || s_max < s_min) throw std::invalid_argument("simtag: need 1 <= s_min <= s_max");
  if (s_max < r + 1) throw std::invalid_argument("simtag: infeasible, need s - r > 0 for some s in range");
  if (p_full < s_max) throw std::invalid_argument("simtag: p >= s_max required");

  const int lo = std::max(s_min, r + 1);
  const int s = lo + static_cast<int>(rng.uniform_int(s_max - lo + 1));

  std::vector<int> causal_full = rng.sample_without_replacement(p_full, s);
  std::sort(causal_full.begin(), causal_full.end());

  std::vector<double> effects(s);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < s; ++a) {
    effects[a] = detail::draw_effect(rng);
    mean += effects[a] * X_full.col(causal_full[a]);
  }
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = mean[i] + rng.normal();

  std::vector<int> drop_pos = rng.sample_without_replacement(s, r);
  std::vector<std::uint8_t> dropped(p_full, 0);
  SimTagResult out;
  for (int pos : drop_pos) {
    dropped[causal_full[pos]] = 1;
    out.truth.removed.push_back(causal_full[pos]);
  }
  std::sort(out.truth.removed.begin(), out.truth.removed.end());

  out.observed_to_full.reserve(p_full - r);
  for (int j = 0; j < p_full; ++j) {
    if (!dropped[j]) out.observed_to_full.push_back(j);
  }
  out.X_observed.resize(n, p_full - r);
  for (int jo = 0; jo < p_full - r; ++jo) {
    out.X_observed.col(jo) = X_full.col(out.observed_to_full[jo]);
  }
  for (int a = 0; a < s; ++a) {
    const int jf = causal_full[a];
    if (dropped[jf]) continue;
    const auto it = std::lower_bound(out.observed_to_full.begin(),
                                     out.observed_to_full.end(), jf);
    out.truth.causal.push_back(static_cast<int>(it - out.observed_to_full.begin()));
    out.truth.effects.push_back(effects[a]);
  }
  out.y = quantile_normalize(y);
  return out;
}

}  // namespace bssr
