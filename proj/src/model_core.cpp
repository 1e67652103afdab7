#include "ddprm/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ddprm {

namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string("non-finite ") + what);
  }
}

}  // namespace

void pcm_log_distribution(double theta, std::span<const double> tau,
                          std::span<double> out) {
  check_finite(theta, "theta");
  const std::size_t m = tau.size();
  if (out.size() != m + 1) {
    throw std::invalid_argument("pcm output span must have m + 1 entries");
  }
  // unnormalized log masses: k*theta - sum_{l<=k} tau_l, with tau_0 = 0
  double cum = 0.0;
  out[0] = 0.0;
  for (std::size_t k = 1; k <= m; ++k) {
    check_finite(tau[k - 1], "threshold");
    cum += tau[k - 1];
    out[k] = static_cast<double>(k) * theta - cum;
  }
  const double lz = log_sum_exp(out);
  for (std::size_t k = 0; k <= m; ++k) out[k] -= lz;
}

std::vector<double> pcm_distribution(double theta, const ThresholdVector& tau) {
  std::vector<double> p(tau.size() + 1);
  pcm_log_distribution(theta, tau, p);
  for (double& v : p) v = std::exp(v);
  return p;
}

double pcm_log_prob(double theta, std::span<const double> tau, int y) {
  const int m = static_cast<int>(tau.size());
  if (y < 0 || y > m) {
    throw std::invalid_argument("rating outside 0..m");
  }
  check_finite(theta, "theta");
  double cum = 0.0;
  std::vector<double> logs(static_cast<std::size_t>(m) + 1);
  logs[0] = 0.0;
  for (int k = 1; k <= m; ++k) {
    check_finite(tau[static_cast<std::size_t>(k - 1)], "threshold");
    cum += tau[static_cast<std::size_t>(k - 1)];
    logs[static_cast<std::size_t>(k)] = k * theta - cum;
  }
  return logs[static_cast<std::size_t>(y)] - log_sum_exp(logs);
}

std::pair<double, double> pcm_mean_var(double theta,
                                       const ThresholdVector& tau) {
  const std::vector<double> p = pcm_distribution(theta, tau);
  double mean = 0.0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    mean += static_cast<double>(k) * p[k];
  }
  double var = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = static_cast<double>(k) - mean;
    var += d * d * p[k];
  }
  return {mean, var};
}

double linear_predictor(const CovariateVector& x,
                        const std::vector<double>& gamma) {
  if (x.size() != gamma.size()) {
    throw std::invalid_argument("covariate/coefficient dimension mismatch");
  }
  double v = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) v += x[j] * gamma[j];
  return v;
}

LocalSubset local_subset(double v, double psi) {
  check_finite(v, "location");
  if (!(psi >= 0.0) || !std::isfinite(psi)) {
    throw std::invalid_argument("psi must be finite and nonnegative");
  }
  LocalSubset s;
  s.first = std::max(1, static_cast<int>(std::ceil(v - psi)));
  s.last = static_cast<int>(std::floor(v + psi));
  if (s.empty()) {
    throw empty_neighborhood_error(
        "no positive integer address within psi of location " +
        std::to_string(v));
  }
  return s;
}

std::vector<double> stick_weights(std::span<const double> upsilon) {
  if (upsilon.empty()) {
    throw std::invalid_argument("stick sequence is empty");
  }
  std::vector<double> w(upsilon.size());
  double remain = 1.0;
  for (std::size_t l = 0; l < upsilon.size(); ++l) {
    if (!(upsilon[l] > 0.0) || !(upsilon[l] < 1.0)) {
      throw std::invalid_argument("stick fraction outside (0, 1)");
    }
    if (l + 1 == upsilon.size()) break;
    w[l] = upsilon[l] * remain;
    remain *= 1.0 - upsilon[l];
  }
  // final stick forced to one: the subset's last atom absorbs what is left
  w[upsilon.size() - 1] = remain;
  return w;
}

MixtureDistribution stick_weights(const LocalSubset& subset,
                                  const std::map<int, Component>& components) {
  std::vector<double> ups(static_cast<std::size_t>(subset.size()));
  for (int l = 0; l < subset.size(); ++l) {
    ups[static_cast<std::size_t>(l)] =
        components.at(subset.address(l)).upsilon;
  }
  return {subset, stick_weights(ups)};
}

MixtureDistribution local_weights(const StickBreakState& state,
                                  const CovariateVector& x, double psi_x) {
  const double v = linear_predictor(x, state.gamma);
  return stick_weights(local_subset(v, psi_x), state.components);
}

double mixture_rating_probability(int y, double theta,
                                  const CovariateVector& x, double psi_x,
                                  const StickBreakState& state) {
  const MixtureDistribution mix = local_weights(state, x, psi_x);
  double p = 0.0;
  for (int l = 0; l < mix.subset.size(); ++l) {
    const Component& c = state.components.at(mix.subset.address(l));
    p += mix.weights[static_cast<std::size_t>(l)] *
         std::exp(pcm_log_prob(theta, c.tau, y));
  }
  return p;
}

}  // namespace ddprm
