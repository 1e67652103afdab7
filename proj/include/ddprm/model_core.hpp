#ifndef DDPRM_MODEL_CORE_HPP
#define DDPRM_MODEL_CORE_HPP

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "ddprm/common.hpp"

namespace ddprm {

// Step thresholds tau_1..tau_m of one partial credit item. tau_0 = 0 is
// implicit and never stored.
using ThresholdVector = std::vector<double>;

// Covariate vector x for one observation (a dummy indicator row or an
// explicit design row).
using CovariateVector = std::vector<double>;

// Contiguous block of positive integer atom addresses. The neighborhood of a
// location v under half-width psi is always an integer interval, so first and
// last describe it completely. Empty when last < first.
struct LocalSubset {
  int first = 1;
  int last = 0;

  int size() const { return last >= first ? last - first + 1 : 0; }
  bool empty() const { return last < first; }
  bool contains(int h) const { return h >= first && h <= last; }
  // l-th ordered address, 0-based.
  int address(int l) const { return first + l; }
  // position of address h within the subset
  int position(int h) const { return h - first; }
};

// One mixture component: a threshold atom and its stick-breaking fraction.
struct Component {
  ThresholdVector tau;
  double upsilon = 0.5;
};

// Stick-breaking state shared across observations: the materialized
// components keyed by address, the covariate coefficients, and one
// neighborhood half-width per covariate pattern.
struct StickBreakState {
  std::map<int, Component> components;
  std::vector<double> gamma;
  std::vector<double> psi;
};

// Localized mixing distribution at one covariate pattern: weights[l] is the
// mass on atom subset.address(l). Weights sum to one exactly because the
// final stick is forced to one.
struct MixtureDistribution {
  LocalSubset subset;
  std::vector<double> weights;
};

// Partial credit kernel. theta is the examinee ability, tau the m step
// thresholds; categories run 0..m.
void pcm_log_distribution(double theta, std::span<const double> tau,
                          std::span<double> out);
std::vector<double> pcm_distribution(double theta, const ThresholdVector& tau);
double pcm_log_prob(double theta, std::span<const double> tau, int y);
std::pair<double, double> pcm_mean_var(double theta,
                                       const ThresholdVector& tau);

double linear_predictor(const CovariateVector& x,
                        const std::vector<double>& gamma);

// Addresses h >= 1 with |v - h| <= psi. Throws empty_neighborhood_error when
// no address qualifies.
LocalSubset local_subset(double v, double psi);

// Stick-breaking weights over an ordered stick sequence, with the final
// stick forced to one so the weights sum to one exactly.
std::vector<double> stick_weights(std::span<const double> upsilon);

// Convenience overload gathering sticks from a component map. Throws
// std::out_of_range if an address in the subset has no component.
MixtureDistribution stick_weights(const LocalSubset& subset,
                                  const std::map<int, Component>& components);

// Weights at pattern location v = x'gamma with half-width psi_x.
MixtureDistribution local_weights(const StickBreakState& state,
                                  const CovariateVector& x, double psi_x);

// P(Y = y | x) under the localized mixture for one examinee ability.
double mixture_rating_probability(int y, double theta,
                                  const CovariateVector& x, double psi_x,
                                  const StickBreakState& state);

}  // namespace ddprm

#endif
