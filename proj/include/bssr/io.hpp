#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bssr/baselines.hpp"
#include "bssr/errors.hpp"
#include "bssr/eval.hpp"
#include "bssr/inference.hpp"
#include "bssr/kernels.hpp"
#include "bssr/simgen.hpp"

namespace bssr {

// Shortest round-trip decimal representation; reruns print identical bytes.
inline std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for reading: " + path);
  return in;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

inline double parse_double(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ": expected a number, got '" + s + "'");
  }
}

inline long long parse_int(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ": expected an integer, got '" + s + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrix files: "#rows n #cols p" header, then whitespace-delimited rows.

inline void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  auto out = detail::open_out(path);
  out << "#rows " << m.rows() << " #cols " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << fmt_double(m(i, j));
    }
    out << '\n';
  }
}

inline Eigen::MatrixXd read_matrix(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto toks = detail::split_ws(line);
  if (toks.size() != 4 || toks[0] != "#rows" || toks[2] != "#cols") {
    throw DataError(path + ": expected header '#rows n #cols p'");
  }
  const long long n = detail::parse_int(toks[1], path);
  const long long p = detail::parse_int(toks[3], path);
  if (n < 1 || p < 1) throw DataError(path + ": non-positive dimensions");

  Eigen::MatrixXd m(n, p);
  for (long long i = 0; i < n; ++i) {
    for (long long j = 0; j < p; ++j) {
      double v;
      if (!(in >> v)) throw DataError(path + ": truncated matrix body");
      if (!std::isfinite(v)) throw DataError(path + ": non-finite entry");
      m(i, j) = v;
    }
  }
  double extra;
  if (in >> extra) throw DataError(path + ": more values than the header declares");
  return m;
}

inline void write_vector(const std::string& path, const Eigen::VectorXd& v) {
  write_matrix(path, v);
}

inline Eigen::VectorXd read_vector(const std::string& path) {
  const Eigen::MatrixXd m = read_matrix(path);
  if (m.cols() != 1) throw DataError(path + ": expected a single column");
  return m.col(0);
}

// ---------------------------------------------------------------------------
// Simulation truth files.

inline void write_truth(const std::string& path, const SimTruth& truth, int p) {
  auto out = detail::open_out(path);
  out << "#truth cols " << p << "\n";
  for (std::size_t i = 0; i < truth.causal.size(); ++i) {
    out << "causal " << truth.causal[i] << ' ' << fmt_double(truth.effects[i]) << '\n';
  }
  for (int r : truth.removed) out << "removed " << r << '\n';
}

struct TruthFile {
  int p = 0;
  SimTruth truth;

  std::vector<std::uint8_t> truth_mask() const {
    std::vector<std::uint8_t> m(p, 0);
    for (int j : truth.causal) {
      if (j < 0 || j >= p) throw DataError("truth file: causal index out of range");
      m[j] = 1;
    }
    return m;
  }
};

inline TruthFile read_truth(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  auto toks = detail::split_ws(line);
  if (toks.size() != 3 || toks[0] != "#truth" || toks[1] != "cols") {
    throw DataError(path + ": expected header '#truth cols p'");
  }
  TruthFile t;
  t.p = static_cast<int>(detail::parse_int(toks[2], path));
  while (std::getline(in, line)) {
    toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "causal" && toks.size() == 3) {
      t.truth.causal.push_back(static_cast<int>(detail::parse_int(toks[1], path)));
      t.truth.effects.push_back(detail::parse_double(toks[2], path));
    } else if (toks[0] == "removed" && toks.size() == 2) {
      t.truth.removed.push_back(static_cast<int>(detail::parse_int(toks[1], path)));
    } else {
      throw DataError(path + ": malformed truth line '" + line + "'");
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Posterior summaries: one record per predictor plus a metadata record per
// trait.

inline void write_summaries(const std::string& path,
                            const std::vector<PosteriorSummary>& summaries,
                            const std::vector<std::string>& trait_ids) {
  if (summaries.size() != trait_ids.size()) {
    throw std::invalid_argument("write_summaries: one id per summary required");
  }
  auto out = detail::open_out(path);
  out << "#bssr-summary trait predictor ppi map_included\n";
  for (std::size_t t = 0; t < summaries.size(); ++t) {
    const auto& s = summaries[t];
    out << "#meta trait " << trait_ids[t] << " p " << s.ppi.size() << " seed " << s.seed
        << " burn " << s.schedule.burn_in << " collect " << s.schedule.collect
        << " thin " << s.schedule.thin << " jitter " << fmt_double(s.jitter_applied)
        << " y_center " << fmt_double(s.y_center) << " y_scale " << fmt_double(s.y_scale)
        << " ess_proposals " << fmt_double(s.mean_ess_proposals)
        << " slice_evals " << fmt_double(s.mean_slice_evals)
        << " map_log_joint " << fmt_double(s.map_log_joint) << "\n";
    for (Eigen::Index j = 0; j < s.ppi.size(); ++j) {
      out << trait_ids[t] << ' ' << j << ' ' << fmt_double(s.ppi[j]) << ' '
          << int(s.map_mask.empty() ? 0 : s.map_mask[j]) << '\n';
    }
  }
}

inline void write_trace(const std::string& path, const PosteriorSummary& s) {
  auto out = detail::open_out(path);
  out << "#trace iter gamma0 lambda nu included log_joint\n";
  for (std::size_t i = 0; i < s.traces.size(); ++i) {
    const auto& r = s.traces[i];
    out << i << ' ' << fmt_double(r.gamma0) << ' ' << fmt_double(r.lambda) << ' '
        << fmt_double(r.nu) << ' ' << r.included_count << ' '
        << fmt_double(r.log_joint) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Baseline results and generic score files.

inline void write_fsr(const std::string& path, const FsrResult& r, int p) {
  auto out = detail::open_out(path);
  out << "#fsr-result predictor step coefficient\n";
  out << "#meta p " << p << " intercept " << fmt_double(r.intercept) << " bic";
  for (double b : r.bic_trace) out << ' ' << fmt_double(b);
  out << "\n";
  for (std::size_t i = 0; i < r.selected.size(); ++i) {
    out << r.selected[i] << ' ' << (i + 1) << ' '
        << fmt_double(r.coefficients[static_cast<int>(i)]) << '\n';
  }
}

inline void write_scores(const std::string& path, const Eigen::VectorXd& scores) {
  auto out = detail::open_out(path);
  out << "#scores p " << scores.size() << "\n";
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    out << j << ' ' << fmt_double(scores[j]) << '\n';
  }
}

// Reads per-predictor score vectors from any of the formats this tool
// emits: fit summaries (PPI column, one vector per trait), forward-stepwise
// results (|coefficient|), or plain score files.
inline std::vector<Eigen::VectorXd> read_score_vectors(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto head = detail::split_ws(line);
  if (head.empty()) throw DataError(path + ": missing header");

  std::vector<Eigen::VectorXd> out;
  if (head[0] == "#bssr-summary") {
    Eigen::VectorXd current;
    bool have = false;
    while (std::getline(in, line)) {
      auto toks = detail::split_ws(line);
      if (toks.empty()) continue;
      if (toks[0] == "#meta") {
        if (have) out.push_back(current);
        int p = -1;
        for (std::size_t i = 1; i + 1 < toks.size(); i += 2) {
          if (toks[i] == "p") p = static_cast<int>(detail::parse_int(toks[i + 1], path));
        }
        if (p < 1) throw DataError(path + ": summary meta line lacks p");
        current = Eigen::VectorXd::Zero(p);
        have = true;
      } else {
        if (!have || toks.size() != 4) throw DataError(path + ": malformed summary record");
        const long long j = detail::parse_int(toks[1], path);
        if (j < 0 || j >= current.size()) throw DataError(path + ": predictor index out of range");
        current[j] = detail::parse_double(toks[2], path);
      }
    }
    if (have) out.push_back(current);
    if (out.empty()) throw DataError(path + ": summary file holds no traits");
    return out;
  }

  if (head[0] == "#fsr-result") {
    if (!std::getline(in, line)) throw DataError(path + ": truncated fsr file");
    auto meta = detail::split_ws(line);
    int p = -1;
    for (std::size_t i = 1; i + 1 < meta.size(); i += 2) {
      if (meta[i] == "p") p = static_cast<int>(detail::parse_int(meta[i + 1], path));
      if (meta[i] == "bic") break;
    }
    if (p < 1) throw DataError(path + ": fsr meta line lacks p");
    Eigen::VectorXd scores = Eigen::VectorXd::Zero(p);
    while (std::getline(in, line)) {
      auto toks = detail::split_ws(line);
      if (toks.empty()) continue;
      if (toks.size() != 3) throw DataError(path + ": malformed fsr record");
      const long long j = detail::parse_int(toks[0], path);
      if (j < 0 || j >= p) throw DataError(path + ": predictor index out of range");
      scores[j] = std::fabs(detail::parse_double(toks[2], path));
    }
    out.push_back(std::move(scores));
    return out;
  }

  if (head[0] == "#scores") {
    if (head.size() != 3 || head[1] != "p") throw DataError(path + ": expected '#scores p N'");
    const long long p = detail::parse_int(head[2], path);
    Eigen::VectorXd scores = Eigen::VectorXd::Zero(p);
    while (std::getline(in, line)) {
      auto toks = detail::split_ws(line);
      if (toks.empty()) continue;
      if (toks.size() != 2) throw DataError(path + ": malformed score record");
      const long long j = detail::parse_int(toks[0], path);
      if (j < 0 || j >= p) throw DataError(path + ": predictor index out of range");
      scores[j] = detail::parse_double(toks[1], path);
    }
    out.push_back(std::move(scores));
    return out;
  }

  throw DataError(path + ": unrecognized score file header '" + head[0] + "'");
}

// ---------------------------------------------------------------------------
// Evaluation tables.

inline void write_pr_table(const std::string& path, const std::vector<PrPoint>& points) {
  auto out = detail::open_out(path);
  out << "#pr-table threshold tp fp precision recall\n";
  for (const auto& pt : points) {
    out << fmt_double(pt.threshold) << ' ' << pt.tp << ' ' << pt.fp << ' '
        << fmt_double(pt.precision) << ' ' << fmt_double(pt.recall) << '\n';
  }
  out << "#auc " << fmt_double(auc_pr(points)) << '\n';
}

inline void write_fdr_table(const std::string& path, const FdrCurve& curve,
                            bool have_chosen = false, double target = 0.0,
                            double chosen = 0.0) {
  auto out = detail::open_out(path);
  out << "#fdr-table threshold real_count perm_count fdr\n";
  out << "#permutations " << curve.n_permutations << '\n';
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    out << fmt_double(curve.thresholds[i]) << ' ' << curve.real_counts[i] << ' '
        << curve.perm_counts[i] << ' ' << fmt_double(curve.fdr[i]) << '\n';
  }
  if (have_chosen) {
    out << "#chosen target " << fmt_double(target) << " threshold "
        << fmt_double(chosen) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Kernel export/import.

inline void save_kernel(const std::string& path, const StructureKernel& k) {
  auto out = detail::open_out(path);
  out << "#kernel p " << k.p() << " jitter " << fmt_double(k.jitter_applied) << "\n";
  for (int i = 0; i < k.p(); ++i) {
    for (int j = 0; j < k.p(); ++j) {
      if (j) out << ' ';
      out << fmt_double(k.sigma(i, j));
    }
    out << '\n';
  }
}

inline StructureKernel load_kernel(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto toks = detail::split_ws(line);
  if (toks.size() != 5 || toks[0] != "#kernel" || toks[1] != "p" || toks[3] != "jitter") {
    throw DataError(path + ": expected header '#kernel p N jitter J'");
  }
  const long long p = detail::parse_int(toks[2], path);
  if (p < 1) throw DataError(path + ": non-positive kernel dimension");

  StructureKernel k;
  k.jitter_applied = detail::parse_double(toks[4], path);
  k.sigma.resize(p, p);
  for (long long i = 0; i < p; ++i) {
    for (long long j = 0; j < p; ++j) {
      double v;
      if (!(in >> v)) throw DataError(path + ": truncated kernel body");
      k.sigma(i, j) = v;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k.sigma);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(path + ": stored kernel is not positive definite");
  }
  k.chol = llt.matrixL();
  k.check();
  return k;
}

// ---------------------------------------------------------------------------
// File digests, globbing, run manifests.

inline std::string fnv1a_file(const std::string& path) {
  auto in = detail::open_in(path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

namespace detail {

inline bool wildcard_match(const char* pat, const char* str) {
  if (*pat == '\0') return *str == '\0';
  if (*pat == '*') {
    for (const char* s = str;; ++s) {
      if (wildcard_match(pat + 1, s)) return true;
      if (*s == '\0') return false;
    }
  }
  if (*str == '\0') return false;
  if (*pat == '?' || *pat == *str) return wildcard_match(pat + 1, str + 1);
  return false;
}

}  // namespace detail

// Expands a pattern whose components may contain '*' or '?' (any component,
// not just the last). Results are sorted so downstream pairing with a second
// glob is stable.
inline std::vector<std::string> glob_files(const std::string& pattern) {
  namespace fs = std::filesystem;

  std::vector<std::string> parts;
  std::string prefix;
  {
    std::string rest = pattern;
    if (!rest.empty() && rest[0] == '/') {
      prefix = "/";
      rest.erase(0, 1);
    }
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto next = rest.find('/', pos);
      const std::string comp = rest.substr(pos, next == std::string::npos ? next : next - pos);
      if (!comp.empty()) parts.push_back(comp);
      if (next == std::string::npos) break;
      pos = next + 1;
    }
  }
  if (parts.empty()) return {};

  std::vector<std::string> frontier{prefix.empty() ? "." : prefix};
  for (std::size_t level = 0; level < parts.size(); ++level) {
    const std::string& comp = parts[level];
    const bool last = level + 1 == parts.size();
    const bool has_wild =
        comp.find('*') != std::string::npos || comp.find('?') != std::string::npos;
    std::vector<std::string> next;
    for (const auto& base : frontier) {
      if (!has_wild) {
        const std::string path = base == "." ? comp : base + "/" + comp;
        std::error_code ec;
        if (last ? fs::is_regular_file(path, ec) : fs::is_directory(path, ec)) {
          next.push_back(path);
        }
        continue;
      }
      std::error_code ec;
      for (const auto& entry : fs::directory_iterator(base, ec)) {
        const std::string fname = entry.path().filename().string();
        if (!detail::wildcard_match(comp.c_str(), fname.c_str())) continue;
        if (last ? entry.is_regular_file() : entry.is_directory()) {
          next.push_back(base == "." ? fname : base + "/" + fname);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(frontier.begin(), frontier.end());
  return frontier;
}

struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> flags;  // in emission order
  std::string seed;                                        // empty when not applicable
  std::vector<std::string> inputs;                         // paths; digests computed on write
};

inline void write_manifest(const std::string& dir, const Manifest& m,
                           const std::string& version) {
  std::filesystem::create_directories(dir);
  auto out = detail::open_out(dir + "/manifest.txt");
  out << "#manifest\n";
  out << "tool bssr " << version << '\n';
  out << "command " << m.command << '\n';
  for (const auto& [k, v] : m.flags) out << "flag " << k << ' ' << v << '\n';
  if (!m.seed.empty()) out << "seed " << m.seed << '\n';
  std::vector<std::string> inputs = m.inputs;
  std::sort(inputs.begin(), inputs.end());
  for (const auto& path : inputs) {
    out << "input " << path << " fnv1a " << fnv1a_file(path) << '\n';
  }
}

}  // namespace bssr
