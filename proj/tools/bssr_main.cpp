// Command-line front end: simulation, fitting, baseline, and evaluation
// subcommands wired into reproducible, manifest-stamped pipelines.
//
// Exit codes: 0 success, 2 usage, 3 data, 4 numerical.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "bssr/bssr.hpp"

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string rep_name(int r, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "rep%03d_%s.txt", r, suffix);
  return buf;
}

std::string trait_name(const char* stem, int t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_t%03d.txt", stem, t);
  return buf;
}

struct SimulateOpts {
  std::string mode;
  int n = 300, p = 200, blocks = 10;
  double rho = 0.9, maf_min = 0.1, maf_max = 0.5;
  int q_min = 2, q_max = 6;
  int s_min = 2, s_max = 8, remove = 0;
  int reps = 1;
  std::uint64_t seed = 0;
  std::string out;
};

void run_simulate(const SimulateOpts& o) {
  if (o.mode != "sim1" && o.mode != "simtag") {
    throw UsageError("--mode must be sim1 or simtag");
  }
  if (o.reps < 1) throw UsageError("--reps must be >= 1");
  if (!(o.rho >= 0.0 && o.rho < 1.0)) throw UsageError("--rho must lie in [0, 1)");
  const bool tag = o.mode == "simtag";
  if (tag) {
    if (o.s_min < 1 || o.s_max < o.s_min) throw UsageError("need 1 <= --s-min <= --s-max");
    if (o.remove < 0) throw UsageError("--remove must be >= 0");
    if (o.s_max < o.remove + 1) {
      throw UsageError("infeasible removal: need s - r > 0, so --s-max must exceed --remove");
    }
  } else {
    if (o.q_min < 1 || o.q_max < o.q_min) throw UsageError("need 1 <= --q-min <= --q-max");
    if (o.q_max > o.p) throw UsageError("--q-max cannot exceed --p");
  }

  std::filesystem::create_directories(o.out);
  for (int r = 0; r < o.reps; ++r) {
    bssr::RngStream rng(o.seed + static_cast<std::uint64_t>(r));
    bssr::GenotypeSpec spec;
    spec.n = o.n;
    spec.p = tag ? o.p + o.remove : o.p;
    spec.block_size = o.blocks;
    spec.rho = o.rho;
    spec.maf_low = o.maf_min;
    spec.maf_high = o.maf_max;

    const Eigen::MatrixXd X = bssr::simulate_genotypes(spec, rng);
    if (tag) {
      const auto res = bssr::simtag(X, o.s_min, o.s_max, o.remove, rng);
      bssr::write_matrix(o.out + "/" + rep_name(r, "X"), res.X_observed);
      bssr::write_vector(o.out + "/" + rep_name(r, "y"), res.y);
      bssr::write_truth(o.out + "/" + rep_name(r, "truth"), res.truth,
                        static_cast<int>(res.X_observed.cols()));
    } else {
      const auto res = bssr::sim1(X, o.q_min, o.q_max, rng);
      bssr::write_matrix(o.out + "/" + rep_name(r, "X"), X);
      bssr::write_vector(o.out + "/" + rep_name(r, "y"), res.y);
      bssr::write_truth(o.out + "/" + rep_name(r, "truth"), res.truth, o.p);
    }
  }

  bssr::Manifest m;
  m.command = "simulate";
  m.flags = {{"--mode", o.mode},
             {"--n", std::to_string(o.n)},
             {"--p", std::to_string(o.p)},
             {"--blocks", std::to_string(o.blocks)},
             {"--rho", bssr::fmt_double(o.rho)},
             {"--maf-min", bssr::fmt_double(o.maf_min)},
             {"--maf-max", bssr::fmt_double(o.maf_max)},
             {"--reps", std::to_string(o.reps)},
             {"--out", o.out}};
  if (tag) {
    m.flags.push_back({"--s-min", std::to_string(o.s_min)});
    m.flags.push_back({"--s-max", std::to_string(o.s_max)});
    m.flags.push_back({"--remove", std::to_string(o.remove)});
  } else {
    m.flags.push_back({"--q-min", std::to_string(o.q_min)});
    m.flags.push_back({"--q-max", std::to_string(o.q_max)});
  }
  m.seed = std::to_string(o.seed);
  bssr::write_manifest(o.out, m, bssr::kVersion);
}

struct FitOpts {
  std::string x_path, y_path;
  std::string kernel = "correlation";
  std::string kernel_x, kernel_in, kernel_out, groups_path;
  double rho = 0.5;
  double jitter = bssr::kDefaultKernelJitter;
  int burn = 500, collect = 1000, thin = 1;
  double k0 = -1.0;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;
};

void run_fit(const FitOpts& o) {
  if (o.collect < 1) throw UsageError("--collect must be >= 1");
  if (o.burn < 0) throw UsageError("--burn must be >= 0");
  if (o.thin < 1) throw UsageError("--thin must be >= 1");
  if (o.workers < 1) throw UsageError("--workers must be >= 1");
  if (o.kernel != "correlation" && o.kernel != "covariance" &&
      o.kernel != "identity" && o.kernel != "block") {
    throw UsageError("--kernel must be one of correlation|covariance|identity|block");
  }
  if (o.kernel == "block" && o.kernel_in.empty() && o.groups_path.empty()) {
    throw UsageError("--kernel block requires --groups");
  }
  if (!(o.rho >= 0.0 && o.rho < 1.0)) throw UsageError("--rho must lie in [0, 1)");
  if (!(o.jitter > 0.0)) throw UsageError("--jitter must be positive");

  const Eigen::MatrixXd X = bssr::read_matrix(o.x_path);
  const Eigen::MatrixXd Y = bssr::read_matrix(o.y_path);
  if (Y.rows() != X.rows()) {
    throw bssr::DataError("fit: " + o.y_path + " has " + std::to_string(Y.rows()) +
                          " rows but " + o.x_path + " has " + std::to_string(X.rows()));
  }
  const int p = static_cast<int>(X.cols());

  bssr::StructureKernel kernel;
  if (!o.kernel_in.empty()) {
    kernel = bssr::load_kernel(o.kernel_in);
    if (kernel.p() != p) {
      throw bssr::DataError("fit: kernel dimension " + std::to_string(kernel.p()) +
                            " does not match p = " + std::to_string(p));
    }
  } else if (o.kernel == "identity") {
    kernel = bssr::identity_kernel(p, o.jitter);
  } else if (o.kernel == "block") {
    const Eigen::MatrixXd g = bssr::read_matrix(o.groups_path);
    if (g.rows() != p || g.cols() != 1) {
      throw bssr::DataError("fit: groups file must have one label per predictor");
    }
    std::vector<int> groups(p);
    for (int j = 0; j < p; ++j) groups[j] = static_cast<int>(g(j, 0));
    kernel = bssr::block_kernel(groups, o.rho, o.jitter);
  } else {
    Eigen::MatrixXd panel_storage;
    const Eigen::MatrixXd* panel = &X;
    if (!o.kernel_x.empty()) {
      panel_storage = bssr::read_matrix(o.kernel_x);
      panel = &panel_storage;
    }
    if (panel->cols() != p) {
      throw bssr::DataError("fit: kernel panel has " + std::to_string(panel->cols()) +
                            " columns but p = " + std::to_string(p));
    }
    kernel = o.kernel == "correlation" ? bssr::correlation_kernel(*panel, o.jitter)
                                       : bssr::covariance_kernel(*panel, o.jitter);
  }
  if (!o.kernel_out.empty()) bssr::save_kernel(o.kernel_out, kernel);

  const bssr::Hyperparams hyper = bssr::Hyperparams::defaults(p, o.k0);
  bssr::ChainSchedule schedule{o.burn, o.collect, o.thin};

  const int traits = static_cast<int>(Y.cols());
  std::vector<Eigen::VectorXd> ys(traits);
  std::vector<std::uint64_t> seeds(traits);
  for (int t = 0; t < traits; ++t) {
    ys[t] = Y.col(t);
    seeds[t] = o.seed + static_cast<std::uint64_t>(t);
  }

  const auto fits = bssr::fit_trait_batch(X, ys, kernel, hyper, schedule, seeds, o.workers);

  std::filesystem::create_directories(o.out);
  std::vector<bssr::PosteriorSummary> ok_summaries;
  std::vector<std::string> ok_ids;
  bool any_failed = false;
  for (int t = 0; t < traits; ++t) {
    if (!fits[t].ok) {
      any_failed = true;
      std::cerr << "trait " << t << " failed: " << fits[t].error << "\n";
      continue;
    }
    ok_summaries.push_back(fits[t].summary);
    ok_ids.push_back(std::to_string(t));
    bssr::write_trace(o.out + "/" + trait_name("trace", t), fits[t].summary);
  }
  bssr::write_summaries(o.out + "/summary.txt", ok_summaries, ok_ids);

  bssr::Manifest m;
  m.command = "fit";
  m.flags = {{"--x", o.x_path},
             {"--y", o.y_path},
             {"--kernel", o.kernel},
             {"--rho", bssr::fmt_double(o.rho)},
             {"--jitter", bssr::fmt_double(o.jitter)},
             {"--burn", std::to_string(o.burn)},
             {"--collect", std::to_string(o.collect)},
             {"--thin", std::to_string(o.thin)},
             {"--k0", bssr::fmt_double(o.k0)},
             {"--workers", std::to_string(o.workers)},
             {"--out", o.out}};
  if (!o.kernel_x.empty()) m.flags.push_back({"--kernel-x", o.kernel_x});
  if (!o.kernel_in.empty()) m.flags.push_back({"--kernel-in", o.kernel_in});
  if (!o.kernel_out.empty()) m.flags.push_back({"--kernel-out", o.kernel_out});
  if (!o.groups_path.empty()) m.flags.push_back({"--groups", o.groups_path});
  m.seed = std::to_string(o.seed);
  m.inputs = {o.x_path, o.y_path};
  if (!o.kernel_x.empty()) m.inputs.push_back(o.kernel_x);
  if (!o.kernel_in.empty()) m.inputs.push_back(o.kernel_in);
  if (!o.groups_path.empty()) m.inputs.push_back(o.groups_path);
  bssr::write_manifest(o.out, m, bssr::kVersion);

  if (any_failed) throw bssr::NumericalError("fit: one or more traits failed");
}

struct FsrOpts {
  std::string x_path, y_path, out;
};

void run_fsr(const FsrOpts& o) {
  const Eigen::MatrixXd X = bssr::read_matrix(o.x_path);
  const Eigen::MatrixXd Y = bssr::read_matrix(o.y_path);
  if (Y.rows() != X.rows()) {
    throw bssr::DataError("fsr: response rows do not match predictor rows");
  }
  std::filesystem::create_directories(o.out);
  for (int t = 0; t < Y.cols(); ++t) {
    const auto res = bssr::forward_stepwise_bic(bssr::Dataset(X, Y.col(t)));
    bssr::write_fsr(o.out + "/" + trait_name("fsr", t), res, static_cast<int>(X.cols()));
  }
  bssr::Manifest m;
  m.command = "fsr";
  m.flags = {{"--x", o.x_path}, {"--y", o.y_path}, {"--out", o.out}};
  m.inputs = {o.x_path, o.y_path};
  bssr::write_manifest(o.out, m, bssr::kVersion);
}

struct EvalPrOpts {
  std::string scores_glob, truth_glob, out;
};

void run_eval_pr(const EvalPrOpts& o) {
  const auto score_files = bssr::glob_files(o.scores_glob);
  const auto truth_files = bssr::glob_files(o.truth_glob);
  if (score_files.empty()) throw bssr::DataError("eval pr: no files match " + o.scores_glob);
  if (truth_files.empty()) throw bssr::DataError("eval pr: no files match " + o.truth_glob);
  if (score_files.size() != truth_files.size()) {
    throw bssr::DataError("eval pr: " + std::to_string(score_files.size()) +
                          " score files vs " + std::to_string(truth_files.size()) +
                          " truth files");
  }

  std::vector<bssr::ScoredPredictors> scored;
  for (std::size_t i = 0; i < score_files.size(); ++i) {
    const auto truth = bssr::read_truth(truth_files[i]);
    const auto mask = truth.truth_mask();
    for (auto& scores : bssr::read_score_vectors(score_files[i])) {
      if (scores.size() != truth.p) {
        throw bssr::DataError("eval pr: " + score_files[i] + " scores " +
                              std::to_string(scores.size()) + " predictors but truth has " +
                              std::to_string(truth.p));
      }
      scored.push_back({std::move(scores), mask});
    }
  }
  const auto points = bssr::pr_curve(scored);
  bssr::write_pr_table(o.out, points);

  bssr::Manifest m;
  m.command = "eval-pr";
  m.flags = {{"--scores", o.scores_glob}, {"--truth", o.truth_glob}, {"--out", o.out}};
  for (const auto& f : score_files) m.inputs.push_back(f);
  for (const auto& f : truth_files) m.inputs.push_back(f);
  const auto dir = std::filesystem::path(o.out).parent_path();
  bssr::write_manifest(dir.empty() ? "." : dir.string(), m, bssr::kVersion);
}

struct EvalFdrOpts {
  std::string real_glob, perm_glob, out;
  double target = -1.0;
  int permutations = 1;
};

std::vector<double> pool_scores(const std::vector<std::string>& files) {
  std::vector<double> pool;
  for (const auto& f : files) {
    for (const auto& v : bssr::read_score_vectors(f)) {
      pool.insert(pool.end(), v.data(), v.data() + v.size());
    }
  }
  return pool;
}

void run_eval_fdr(const EvalFdrOpts& o) {
  if (o.permutations < 1) throw UsageError("--permutations must be >= 1");
  const auto real_files = bssr::glob_files(o.real_glob);
  const auto perm_files = bssr::glob_files(o.perm_glob);
  if (real_files.empty()) throw bssr::DataError("eval fdr: no files match " + o.real_glob);
  if (perm_files.empty()) throw bssr::DataError("eval fdr: no files match " + o.perm_glob);

  const auto real_pool = pool_scores(real_files);
  const auto perm_pool = pool_scores(perm_files);
  const auto curve = bssr::empirical_fdr(real_pool, perm_pool, real_pool, o.permutations);

  const bool want_threshold = o.target >= 0.0;
  double chosen = 0.0;
  if (want_threshold) chosen = bssr::threshold_for_fdr(curve, o.target);
  bssr::write_fdr_table(o.out, curve, want_threshold, o.target, chosen);

  bssr::Manifest m;
  m.command = "eval-fdr";
  m.flags = {{"--real", o.real_glob},
             {"--perm", o.perm_glob},
             {"--permutations", std::to_string(o.permutations)},
             {"--out", o.out}};
  if (want_threshold) m.flags.push_back({"--target", bssr::fmt_double(o.target)});
  for (const auto& f : real_files) m.inputs.push_back(f);
  for (const auto& f : perm_files) m.inputs.push_back(f);
  const auto dir = std::filesystem::path(o.out).parent_path();
  bssr::write_manifest(dir.empty() ? "." : dir.string(), m, bssr::kVersion);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian structured sparse regression with Gaussian-field inclusion priors"};
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* cmd_sim = app.add_subcommand("simulate", "Generate synthetic genotypes and traits");
  cmd_sim->add_option("--mode", sim.mode, "sim1 or simtag")->required();
  cmd_sim->add_option("--n", sim.n, "samples");
  cmd_sim->add_option("--p", sim.p, "observed predictors");
  cmd_sim->add_option("--blocks", sim.blocks, "block size for correlated SNPs");
  cmd_sim->add_option("--rho", sim.rho, "within-block latent correlation");
  cmd_sim->add_option("--maf-min", sim.maf_min, "minor allele frequency lower bound");
  cmd_sim->add_option("--maf-max", sim.maf_max, "minor allele frequency upper bound");
  cmd_sim->add_option("--q-min", sim.q_min, "sim1: min causal count");
  cmd_sim->add_option("--q-max", sim.q_max, "sim1: max causal count");
  cmd_sim->add_option("--s-min", sim.s_min, "simtag: min causal count");
  cmd_sim->add_option("--s-max", sim.s_max, "simtag: max causal count");
  cmd_sim->add_option("--remove", sim.remove, "simtag: causal columns to drop");
  cmd_sim->add_option("--reps", sim.reps, "replicates");
  cmd_sim->add_option("--seed", sim.seed, "base seed (replicate r uses seed + r)");
  cmd_sim->add_option("--out", sim.out, "output directory")->required();
  cmd_sim->callback([&]() { run_simulate(sim); });

  FitOpts fit;
  auto* cmd_fit = app.add_subcommand("fit", "Fit the sparse regression model by MCMC");
  cmd_fit->add_option("--x", fit.x_path, "predictor matrix file")->required();
  cmd_fit->add_option("--y", fit.y_path, "response file (columns are traits)")->required();
  cmd_fit->add_option("--kernel", fit.kernel, "correlation|covariance|identity|block");
  cmd_fit->add_option("--kernel-x", fit.kernel_x, "reference panel for the kernel");
  cmd_fit->add_option("--kernel-in", fit.kernel_in, "load a saved kernel");
  cmd_fit->add_option("--kernel-out", fit.kernel_out, "save the kernel used");
  cmd_fit->add_option("--groups", fit.groups_path, "group labels for the block kernel");
  cmd_fit->add_option("--rho", fit.rho, "within-group value for the block kernel");
  cmd_fit->add_option("--jitter", fit.jitter, "base diagonal jitter");
  cmd_fit->add_option("--burn", fit.burn, "burn-in sweeps");
  cmd_fit->add_option("--collect", fit.collect, "collection sweeps");
  cmd_fit->add_option("--thin", fit.thin, "record every thin-th sweep");
  cmd_fit->add_option("--k0", fit.k0, "prior expected inclusion count");
  cmd_fit->add_option("--seed", fit.seed, "base seed (trait t uses seed + t)");
  cmd_fit->add_option("--workers", fit.workers, "trait-level worker pool size");
  cmd_fit->add_option("--out", fit.out, "output directory")->required();
  cmd_fit->callback([&]() { run_fit(fit); });

  FsrOpts fsr;
  auto* cmd_fsr = app.add_subcommand("fsr", "Forward stepwise regression baseline (BIC stop)");
  cmd_fsr->add_option("--x", fsr.x_path, "predictor matrix file")->required();
  cmd_fsr->add_option("--y", fsr.y_path, "response file")->required();
  cmd_fsr->add_option("--out", fsr.out, "output directory")->required();
  cmd_fsr->callback([&]() { run_fsr(fsr); });

  auto* cmd_eval = app.add_subcommand("eval", "Score results against truth or permutations");
  cmd_eval->require_subcommand(1);

  EvalPrOpts epr;
  auto* cmd_pr = cmd_eval->add_subcommand("pr", "Pooled precision-recall table");
  cmd_pr->add_option("--scores", epr.scores_glob, "glob of score/summary files")->required();
  cmd_pr->add_option("--truth", epr.truth_glob, "glob of truth files")->required();
  cmd_pr->add_option("--out", epr.out, "output table")->required();
  cmd_pr->callback([&]() { run_eval_pr(epr); });

  EvalFdrOpts efdr;
  auto* cmd_fdr = cmd_eval->add_subcommand("fdr", "Permutation-based empirical FDR table");
  cmd_fdr->add_option("--real", efdr.real_glob, "glob of real-fit score files")->required();
  cmd_fdr->add_option("--perm", efdr.perm_glob, "glob of permuted-fit score files")->required();
  cmd_fdr->add_option("--target", efdr.target, "FDR target for threshold selection");
  cmd_fdr->add_option("--permutations", efdr.permutations, "number of pooled permutations");
  cmd_fdr->add_option("--out", efdr.out, "output table")->required();
  cmd_fdr->callback([&]() { run_eval_fdr(efdr); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const bssr::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
