#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "bssr/kernels.hpp"
#include "bssr/model.hpp"
#include "bssr/samplers.hpp"

namespace bssr {

struct ChainSchedule {
  int burn_in = 500;
  int collect = 1000;
  int thin = 1;

  void validate() const {
    if (burn_in < 0) throw std::invalid_argument("ChainSchedule: burn_in >= 0 required");
    if (collect < 1) throw std::invalid_argument("ChainSchedule: collect >= 1 required");
    if (thin < 1) throw std::invalid_argument("ChainSchedule: thin >= 1 required");
  }

  int recorded() const { return collect / thin; }
};

struct TraceRecord {
  double gamma0;
  double lambda;
  double nu;
  int included_count;
  double log_joint;
};

struct PosteriorSummary {
  Eigen::VectorXd ppi;                 // inclusion frequency over recorded sweeps
  std::vector<std::uint8_t> map_mask;  // recorded mask with the highest log joint
  double map_log_joint = 0.0;
  std::vector<TraceRecord> traces;
  std::uint64_t seed = 0;
  ChainSchedule schedule;
  double jitter_applied = 0.0;
  double y_center = 0.0;  // response transform applied before fitting
  double y_scale = 1.0;
  double mean_ess_proposals = 0.0;
  double mean_slice_evals = 0.0;
};

// Numerical failure inside a chain, annotated with where it happened.
class ChainError : public NumericalError {
 public:
  ChainError(const std::string& what, long long iteration, McmcState state)
      : NumericalError(what), iteration_(iteration), state_(std::move(state)) {}

  long long iteration() const { return iteration_; }
  const McmcState& state() const { return state_; }

 private:
  long long iteration_;
  McmcState state_;
};

// Runs one chain: burn_in sweeps discarded, then collect sweeps with every
// thin-th recorded. The response is centered and scaled to unit sample
// variance before fitting; the transform is reported in the summary.
// Initialization is at prior means (gamma = 0, gamma0 = mu_gamma,
// lambda = a_lambda/b_lambda, nu = a_nu/b_nu).
inline PosteriorSummary run_chain(const Dataset& data, const StructureKernel& kernel,
                                  const Hyperparams& hyper, const ChainSchedule& schedule,
                                  std::uint64_t seed,
                                  const SliceConfig& gamma0_cfg = SliceConfig{},
                                  const SliceConfig& lambda_cfg = SliceConfig{}) {
  data.validate();
  hyper.validate();
  schedule.validate();
  if (kernel.p() != data.p()) {
    throw std::invalid_argument("run_chain: kernel dimension does not match data");
  }

  const int n = data.n();
  const int p = data.p();

  const double y_center = data.y.mean();
  Eigen::VectorXd yc = data.y.array() - y_center;
  const double y_scale = std::sqrt(yc.squaredNorm() / (n - 1));
  if (!(y_scale > 0.0)) {
    throw std::invalid_argument("run_chain: response has zero variance");
  }
  const CollapsedMarginal lik(Dataset(data.X, yc / y_scale));

  McmcState state;
  state.gamma = Eigen::VectorXd::Zero(p);
  state.gamma0 = hyper.mu_gamma;
  state.lambda = hyper.a_lambda / hyper.b_lambda;
  state.nu = hyper.a_nu / hyper.b_nu;

  RngStream rng(seed);
  SweepStats stats;

  PosteriorSummary out;
  out.seed = seed;
  out.schedule = schedule;
  out.jitter_applied = kernel.jitter_applied;
  out.y_center = y_center;
  out.y_scale = y_scale;
  out.ppi = Eigen::VectorXd::Zero(p);
  out.traces.reserve(schedule.recorded());
  out.map_log_joint = -std::numeric_limits<double>::infinity();

  long long iteration = 0;
  try {
    for (int i = 0; i < schedule.burn_in; ++i, ++iteration) {
      state = sweep(std::move(state), lik, kernel, hyper, gamma0_cfg, lambda_cfg, rng, &stats);
    }
    for (int i = 0; i < schedule.collect; ++i, ++iteration) {
      state = sweep(std::move(state), lik, kernel, hyper, gamma0_cfg, lambda_cfg, rng, &stats);
      if ((i + 1) % schedule.thin != 0) continue;

      const InclusionMask mask = inclusion_mask(state.gamma, state.gamma0);
      const double lj = log_joint(state, lik, kernel.chol, hyper);
      for (int j = 0; j < p; ++j) {
        if (mask.included[j]) out.ppi[j] += 1.0;
      }
      out.traces.push_back({state.gamma0, state.lambda, state.nu, mask.count(), lj});
      if (lj > out.map_log_joint) {
        out.map_log_joint = lj;
        out.map_mask = mask.included;
      }
    }
  } catch (const NumericalError& e) {
    throw ChainError(std::string("chain failed at iteration ") +
                         std::to_string(iteration) + ": " + e.what(),
                     iteration, state);
  }

  const double records = static_cast<double>(out.traces.size());
  out.ppi /= records;
  if (stats.sweeps > 0) {
    out.mean_ess_proposals = static_cast<double>(stats.ess_proposals) / stats.sweeps;
    out.mean_slice_evals =
        static_cast<double>(stats.gamma0_evals + stats.lambda_evals) / stats.sweeps;
  }
  return out;
}

struct TraitFit {
  bool ok = false;
  PosteriorSummary summary;
  std::string error;
};

// Fits many traits that share one predictor matrix, fanning chains over a
// worker pool. Each trait's result depends only on (trait, seed); worker
// count and scheduling never change the output. Per-trait failures are
// captured in the result rather than aborting the batch.
inline std::vector<TraitFit> fit_trait_batch(
    const Eigen::MatrixXd& X, const std::vector<Eigen::VectorXd>& traits,
    const StructureKernel& kernel, const Hyperparams& hyper,
    const ChainSchedule& schedule, const std::vector<std::uint64_t>& seeds,
    int worker_count, const SliceConfig& gamma0_cfg = SliceConfig{},
    const SliceConfig& lambda_cfg = SliceConfig{}) {
  if (seeds.size() != traits.size()) {
    throw std::invalid_argument("fit_trait_batch: one seed per trait required");
  }
  if (worker_count < 1) throw std::invalid_argument("fit_trait_batch: worker_count >= 1 required");
  for (const auto& y : traits) {
    if (y.size() != X.rows()) {
      throw std::invalid_argument("fit_trait_batch: trait length does not match X");
    }
  }

  std::vector<TraitFit> results(traits.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= traits.size()) return;
      try {
        results[i].summary = run_chain(Dataset(X, traits[i]), kernel, hyper,
                                       schedule, seeds[i], gamma0_cfg, lambda_cfg);
        results[i].ok = true;
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].error = e.what();
      }
    }
  };

  const int nthreads = std::min<int>(worker_count, static_cast<int>(traits.size()));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

}  // namespace bssr
