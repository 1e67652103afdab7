#ifndef DDPRM_COMMON_HPP
#define DDPRM_COMMON_HPP

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddprm {

// Thrown when a run configuration (hyperparameters, chain settings, file
// schemas) is invalid. Surfaced before iteration 1 of any chain.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a covariate's neighborhood contains no positive integer
// address. Signals an invalid gamma/psi configuration.
class empty_neighborhood_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown on numerical failure inside a chain (non-finite log target at the
// current state). Carries a diagnostic dump of the offending state.
class chain_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(std::span<const double> logs) {
  double mx = neg_inf;
  for (double v : logs) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : logs) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace ddprm

#endif
