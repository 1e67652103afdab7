#include <doctest.h>

#include <cmath>
#include <vector>

#include "ddprm/rng.hpp"

using namespace ddprm;

TEST_CASE("streams are reproducible and chains are distinct") {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());

  RngStream c0 = RngStream::for_chain(42, 0);
  RngStream c1 = RngStream::for_chain(42, 1);
  bool differs = false;
  for (int i = 0; i < 10; ++i) {
    if (c0.uniform() != c1.uniform()) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("uniform draws stay inside the open interval") {
  RngStream r(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) {
    const double v = r.uniform(2.0, 3.0);
    CHECK(v >= 2.0);
    CHECK(v <= 3.0);
  }
}

TEST_CASE("distribution moments match their families") {
  RngStream r(11);
  const int n = 200000;
  auto moments = [&](auto draw) {
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = draw();
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    return std::pair<double, double>{mean, s2 / n - mean * mean};
  };

  const auto [nm, nv] = moments([&] { return r.normal(1.0, 2.0); });
  CHECK(nm == doctest::Approx(1.0).epsilon(0.03));
  CHECK(nv == doctest::Approx(4.0).epsilon(0.05));

  // gamma with shape 3, rate 2: mean 1.5, variance 0.75
  const auto [gm, gv] = moments([&] { return r.gamma_rate(3.0, 2.0); });
  CHECK(gm == doctest::Approx(1.5).epsilon(0.02));
  CHECK(gv == doctest::Approx(0.75).epsilon(0.05));

  // inverse gamma with shape 4, rate 6: mean 2, variance 2
  const auto [im, iv] = moments([&] { return r.inv_gamma(4.0, 6.0); });
  CHECK(im == doctest::Approx(2.0).epsilon(0.02));
  CHECK(iv == doctest::Approx(2.0).epsilon(0.10));

  // beta(2, 3): mean 0.4, variance 0.04
  const auto [bm, bv] = moments([&] { return r.beta(2.0, 3.0); });
  CHECK(bm == doctest::Approx(0.4).epsilon(0.02));
  CHECK(bv == doctest::Approx(0.04).epsilon(0.05));
}

TEST_CASE("categorical draws follow the log weights") {
  RngStream r(5);
  const std::vector<double> logw = {std::log(0.2), std::log(0.3),
                                    std::log(0.5)};
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const int k = r.categorical_from_log(logw);
    REQUIRE(k >= 0);
    REQUIRE(k < 3);
    ++counts[static_cast<std::size_t>(k)];
  }
  CHECK(counts[0] / double(n) == doctest::Approx(0.2).epsilon(0.05));
  CHECK(counts[1] / double(n) == doctest::Approx(0.3).epsilon(0.05));
  CHECK(counts[2] / double(n) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("categorical selection ignores a constant log shift") {
  RngStream a(9);
  RngStream b(9);
  const std::vector<double> logw = {-1.0, -2.0, 0.5};
  std::vector<double> shifted = logw;
  for (double& v : shifted) v += 123.0;
  for (int i = 0; i < 200; ++i) {
    CHECK(a.categorical_from_log(logw) == b.categorical_from_log(shifted));
  }
}

TEST_CASE("state save and load resumes the identical stream") {
  RngStream r(123);
  for (int i = 0; i < 17; ++i) r.uniform();
  const std::string snap = r.save_state();
  std::vector<double> ahead;
  for (int i = 0; i < 20; ++i) ahead.push_back(r.uniform());

  RngStream fresh(1);
  fresh.load_state(snap);
  for (int i = 0; i < 20; ++i) {
    CHECK(fresh.uniform() == ahead[static_cast<std::size_t>(i)]);
  }
}
