#ifndef DDPRM_POSTERIOR_HPP
#define DDPRM_POSTERIOR_HPP

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ddprm/archive.hpp"
#include "ddprm/rng.hpp"

namespace ddprm {

// Kernel density estimate over a fixed grid. Modes are strict interior
// maxima at least mode_floor times the global peak, sorted by height,
// tallest first.
struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  std::vector<double> mode_locations;
  std::vector<double> mode_heights;
};

struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  std::size_t n = 0;
};

// Posterior predictive mean and variance of one observation's rating,
// averaging the kernel moments over saved states and adding the spread of
// the per-state means.
std::pair<double, double> predictive_mean_var(const PosteriorArchive& a,
                                              int obs_index);

// Posterior predictive category distribution at one covariate pattern. With
// a theta value the ability is held there; without one a fresh ability is
// drawn from n(0, sigma2) of every state, which needs the rng.
std::vector<double> predictive_pmf(const PosteriorArchive& a, int pattern,
                                   std::optional<double> theta,
                                   RngStream* rng = nullptr);

// Mixing-distribution density of threshold coordinate `coord` at a pattern,
// built from the atoms behind each allocated observation across all saved
// states, weighted by allocation counts.
DensityEstimate mixing_density(const PosteriorArchive& a, int pattern,
                               int coord, double mode_floor = 0.05);

// Weighted kernel density estimate on a 512-point grid with a Silverman
// bandwidth; the workhorse behind mixing_density.
DensityEstimate weighted_kde(std::span<const double> values,
                             std::span<const double> weights,
                             double mode_floor = 0.05);

// Modes of a gridded density: strict interior maxima (plateaus count once)
// with height at least floor_frac of the tallest, sorted tallest first.
void find_modes(DensityEstimate& d, double floor_frac);

SummaryStats summarize(std::span<const double> values);

// Scalar trace across saved states. Selectors: sigma2, alpha, loglik,
// theta[t], gamma[j], psi[q], tau_fixed[j][l] with 1-based indices.
std::vector<double> extract_trace(const PosteriorArchive& a,
                                  const std::string& selector);

// Half-width of the batch-means confidence interval for the mean of a
// (possibly autocorrelated) trace.
double batch_means_halfwidth(std::span<const double> trace,
                             double confidence = 0.95);

// One CSV with a column per selector, %.17g formatting.
void export_traces(const PosteriorArchive& a,
                   const std::vector<std::string>& selectors,
                   const std::string& path);

}  // namespace ddprm

#endif
