#ifndef DDPRM_PRIORS_HPP
#define DDPRM_PRIORS_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddprm/rng.hpp"

namespace ddprm {

enum class ItemMode { mixed, fixed };

// un(a, b); a == b encodes a degenerate point mass used to fix a parameter.
struct UniformPrior {
  double a = 0.0;
  double b = 1.0;
  bool degenerate() const { return a == b; }
};

// Mean-zero multivariate normal over an m-vector of thresholds. Covariance
// is scale * I unless a full row-major matrix is supplied.
struct MvnPrior {
  double scale = 1.0;
  std::vector<double> full;  // row-major m*m, empty for scaled identity

  double log_density(std::span<const double> tau) const;
  std::vector<double> sample(std::size_t m, RngStream& rng) const;
};

struct HyperParams {
  // sigma^2 ~ ig(a, b), shape/rate
  double a_sigma2 = 1.0;
  double b_sigma2 = 1.0;
  std::optional<double> fixed_sigma2;

  // atom prior n_m(0, Sigma); separate flatter prior for fixed-threshold items
  MvnPrior tau_prior{2.0, {}};
  MvnPrior tau_fixed_prior{10.0, {}};

  // alpha ~ ga(a, b), shape/rate
  double a_alpha = 1.0;
  double b_alpha = 1.0;
  std::optional<double> fixed_alpha;

  UniformPrior gamma_bounds{1.0, 745.0};
  UniformPrior psi_bounds{0.5, 20.0};
  std::optional<double> fixed_psi;

  std::vector<ItemMode> item_mode;  // one entry per item; empty means all mixed

  bool sigma2_fixed() const { return fixed_sigma2.has_value(); }
  bool alpha_fixed() const { return fixed_alpha.has_value(); }
  bool psi_fixed() const {
    return fixed_psi.has_value() || psi_bounds.degenerate();
  }
  double psi_fixed_value() const {
    return fixed_psi ? *fixed_psi : psi_bounds.a;
  }
  ItemMode mode_of(int item) const {
    return item_mode.empty() ? ItemMode::mixed
                             : item_mode[static_cast<std::size_t>(item)];
  }

  void validate(int num_items) const;
};

// Returns a copy with one parameter block pinned to a constant. Valid names:
// sigma2, psi, alpha. Unknown names raise config_error.
HyperParams fix_parameter(const HyperParams& hyper, const std::string& name,
                          double value);

double log_normal_pdf(double x, double mean, double var);
double log_inv_gamma_pdf(double x, double shape, double rate);
double log_gamma_pdf(double x, double shape, double rate);
double log_beta_pdf(double x, double a, double b);
double log_uniform_pdf(double x, const UniformPrior& u);

}  // namespace ddprm

#endif
