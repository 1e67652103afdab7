#include "ddprm/priors.hpp"

#include <cmath>
#include <stdexcept>

#include "ddprm/common.hpp"

namespace ddprm {

namespace {

constexpr double half_log_2pi = 0.9189385332046727;

// lower Cholesky factor of a row-major square matrix
std::vector<double> cholesky(const std::vector<double>& a, std::size_t m) {
  std::vector<double> l(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * m + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * m + k] * l[j * m + k];
      if (i == j) {
        if (s <= 0.0) {
          throw config_error("threshold covariance is not positive definite");
        }
        l[i * m + i] = std::sqrt(s);
      } else {
        l[i * m + j] = s / l[j * m + j];
      }
    }
  }
  return l;
}

}  // namespace

double MvnPrior::log_density(std::span<const double> tau) const {
  const std::size_t m = tau.size();
  if (m == 0) throw std::invalid_argument("empty threshold vector");
  if (full.empty()) {
    if (!(scale > 0.0)) throw config_error("threshold prior scale must be positive");
    double q = 0.0;
    for (double t : tau) q += t * t;
    return -0.5 * q / scale -
           static_cast<double>(m) * (half_log_2pi + 0.5 * std::log(scale));
  }
  if (full.size() != m * m) {
    throw std::invalid_argument("covariance dimension mismatch");
  }
  const std::vector<double> l = cholesky(full, m);
  // solve L w = tau, then quadratic form is w'w
  std::vector<double> w(m);
  double logdet = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double s = tau[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * m + k] * w[k];
    w[i] = s / l[i * m + i];
    logdet += std::log(l[i * m + i]);
  }
  double q = 0.0;
  for (double v : w) q += v * v;
  return -0.5 * q - logdet - static_cast<double>(m) * half_log_2pi;
}

std::vector<double> MvnPrior::sample(std::size_t m, RngStream& rng) const {
  std::vector<double> z(m);
  for (double& v : z) v = rng.normal(0.0, 1.0);
  if (full.empty()) {
    if (!(scale > 0.0)) throw config_error("threshold prior scale must be positive");
    const double sd = std::sqrt(scale);
    for (double& v : z) v *= sd;
    return z;
  }
  if (full.size() != m * m) {
    throw std::invalid_argument("covariance dimension mismatch");
  }
  const std::vector<double> l = cholesky(full, m);
  std::vector<double> t(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k <= i; ++k) t[i] += l[i * m + k] * z[k];
  }
  return t;
}

void HyperParams::validate(int num_items) const {
  if (!(a_sigma2 > 0.0) || !(b_sigma2 > 0.0)) {
    throw config_error("sigma2 prior needs positive shape and rate");
  }
  if (fixed_sigma2 && !(*fixed_sigma2 > 0.0)) {
    throw config_error("fixed sigma2 must be positive");
  }
  if (!(a_alpha > 0.0) || !(b_alpha > 0.0)) {
    throw config_error("alpha prior needs positive shape and rate");
  }
  if (fixed_alpha && !(*fixed_alpha > 0.0)) {
    throw config_error("fixed alpha must be positive");
  }
  if (!(gamma_bounds.a <= gamma_bounds.b) || !(gamma_bounds.a >= 1.0)) {
    throw config_error("gamma bounds must satisfy 1 <= a <= b");
  }
  if (!(psi_bounds.a <= psi_bounds.b) || !(psi_bounds.a > 0.0)) {
    throw config_error("psi bounds must satisfy 0 < a <= b");
  }
  if (fixed_psi && !(*fixed_psi > 0.0)) {
    throw config_error("fixed psi must be positive");
  }
  if (tau_prior.full.empty() && !(tau_prior.scale > 0.0)) {
    throw config_error("threshold prior scale must be positive");
  }
  if (tau_fixed_prior.full.empty() && !(tau_fixed_prior.scale > 0.0)) {
    throw config_error("fixed-item threshold prior scale must be positive");
  }
  if (!item_mode.empty() &&
      item_mode.size() != static_cast<std::size_t>(num_items)) {
    throw config_error("item_mode length does not match item count");
  }
}

HyperParams fix_parameter(const HyperParams& hyper, const std::string& name,
                          double value) {
  HyperParams h = hyper;
  if (name == "sigma2") {
    if (!(value > 0.0)) throw config_error("fixed sigma2 must be positive");
    h.fixed_sigma2 = value;
  } else if (name == "psi") {
    if (!(value > 0.0)) throw config_error("fixed psi must be positive");
    h.fixed_psi = value;
  } else if (name == "alpha") {
    if (!(value > 0.0)) throw config_error("fixed alpha must be positive");
    h.fixed_alpha = value;
  } else {
    throw config_error("unknown fixable parameter: " + name);
  }
  return h;
}

double log_normal_pdf(double x, double mean, double var) {
  if (!(var > 0.0)) throw std::invalid_argument("variance must be positive");
  const double d = x - mean;
  return -0.5 * d * d / var - half_log_2pi - 0.5 * std::log(var);
}

double log_inv_gamma_pdf(double x, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw std::invalid_argument("inverse gamma needs positive shape and rate");
  }
  if (!(x > 0.0)) return neg_inf;
  return shape * std::log(rate) - std::lgamma(shape) -
         (shape + 1.0) * std::log(x) - rate / x;
}

double log_gamma_pdf(double x, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw std::invalid_argument("gamma needs positive shape and rate");
  }
  if (!(x > 0.0)) return neg_inf;
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

double log_beta_pdf(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("beta needs positive parameters");
  }
  if (!(x > 0.0) || !(x < 1.0)) return neg_inf;
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) +
         std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
}

double log_uniform_pdf(double x, const UniformPrior& u) {
  if (u.degenerate()) return x == u.a ? 0.0 : neg_inf;
  if (x < u.a || x > u.b) return neg_inf;
  return -std::log(u.b - u.a);
}

}  // namespace ddprm
