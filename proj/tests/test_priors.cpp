#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "ddprm/common.hpp"
#include "ddprm/priors.hpp"
#include "ddprm/rng.hpp"

using namespace ddprm;

namespace {

// trapezoid mass of exp(log_pdf) over [lo, hi]
double pdf_mass(double lo, double hi, int n,
                const std::function<double(double)>& log_pdf) {
  const double step = (hi - lo) / (n - 1);
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    mass += w * std::exp(log_pdf(lo + step * i));
  }
  return mass * step;
}

}  // namespace

TEST_CASE("scalar log densities normalize") {
  CHECK(pdf_mass(-10.0, 10.0, 20001, [](double x) {
          return log_normal_pdf(x, 0.0, 1.0);
        }) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(pdf_mass(1e-4, 400.0, 400001, [](double x) {
          return log_inv_gamma_pdf(x, 3.0, 4.0);
        }) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(pdf_mass(1e-6, 30.0, 60001, [](double x) {
          return log_gamma_pdf(x, 2.5, 1.5);
        }) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(pdf_mass(1e-6, 1.0 - 1e-6, 20001, [](double x) {
          return log_beta_pdf(x, 2.0, 3.0);
        }) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fixed points of the scalar densities") {
  CHECK(log_normal_pdf(0.0, 0.0, 1.0) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-15));
  // inverse gamma with shape 3, rate 4 at x = 2: log 2 minus 2
  CHECK(log_inv_gamma_pdf(2.0, 3.0, 4.0) ==
        doctest::Approx(std::log(2.0) - 2.0).epsilon(1e-12));
  CHECK(log_gamma_pdf(1.0, 1.0, 1.0) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(log_beta_pdf(0.5, 1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("multivariate normal log density at a frozen point") {
  const MvnPrior prior{2.0, {}};
  const std::vector<double> zero = {0.0, 0.0};
  CHECK(prior.log_density(zero) ==
        doctest::Approx(-2.5310242469692908).epsilon(1e-12));

  // explicit covariance path agrees with the scaled identity path
  const MvnPrior full{1.0, {2.0, 0.0, 0.0, 2.0}};
  const std::vector<double> x = {0.3, -0.8};
  CHECK(full.log_density(x) ==
        doctest::Approx(prior.log_density(x)).epsilon(1e-12));
}

TEST_CASE("multivariate normal samples have the declared spread") {
  const MvnPrior prior{4.0, {}};
  RngStream r(3);
  double s = 0.0, s2 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> v = prior.sample(2, r);
    for (double t : v) {
      s += t;
      s2 += t * t;
    }
  }
  const double mean = s / (2.0 * n);
  CHECK(mean == doctest::Approx(0.0).epsilon(0.02));
  CHECK(s2 / (2.0 * n) - mean * mean ==
        doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("uniform prior handles the degenerate point") {
  const UniformPrior u{2.0, 5.0};
  CHECK(log_uniform_pdf(3.0, u) ==
        doctest::Approx(-std::log(3.0)).epsilon(1e-13));
  CHECK(log_uniform_pdf(5.5, u) == neg_inf);

  const UniformPrior point{5.0, 5.0};
  CHECK(point.degenerate());
  CHECK(log_uniform_pdf(5.0, point) == 0.0);
  CHECK(log_uniform_pdf(4.9, point) == neg_inf);
}

TEST_CASE("fix_parameter pins the named block") {
  HyperParams base;
  const HyperParams s2 = fix_parameter(base, "sigma2", 1.5);
  CHECK(s2.sigma2_fixed());
  CHECK(*s2.fixed_sigma2 == 1.5);

  const HyperParams al = fix_parameter(base, "alpha", 1.0);
  CHECK(al.alpha_fixed());

  const HyperParams ps = fix_parameter(base, "psi", 5.0);
  CHECK(ps.psi_fixed());
  CHECK(ps.psi_fixed_value() == 5.0);

  CHECK_THROWS_AS(fix_parameter(base, "nonesuch", 1.0), config_error);
}

TEST_CASE("hyper parameter validation rejects broken settings") {
  HyperParams h;
  h.item_mode = {ItemMode::mixed, ItemMode::fixed};
  h.validate(2);
  CHECK_THROWS_AS(h.validate(3), config_error);

  HyperParams neg;
  neg.a_sigma2 = -1.0;
  CHECK_THROWS_AS(neg.validate(1), config_error);

  HyperParams scale;
  scale.tau_prior.scale = 0.0;
  CHECK_THROWS_AS(scale.validate(1), config_error);

  HyperParams bounds;
  bounds.gamma_bounds = {10.0, 2.0};
  CHECK_THROWS_AS(bounds.validate(1), config_error);
}
