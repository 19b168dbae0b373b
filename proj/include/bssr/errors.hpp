#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bssr {

// Thrown when a factorization or other numerical routine fails after all
// recovery attempts. `jitter_levels` records the diagonal regularization
// values that were tried (empty when not applicable).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what,
                          std::vector<double> jitter_levels = {})
      : std::runtime_error(what), jitter_levels_(std::move(jitter_levels)) {}

  const std::vector<double>& jitter_levels() const { return jitter_levels_; }

 private:
  std::vector<double> jitter_levels_;
};

// A sampler was asked to move from a state whose target density is not
// finite (NaN or -inf at the current point).
class InvalidState : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Problems with user-supplied files: unreadable, malformed, or with
// dimensions that do not agree.
class DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A requested lookup has no answer (e.g. no threshold attains the FDR target).
class NotFoundError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bssr
