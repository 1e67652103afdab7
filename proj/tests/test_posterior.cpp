#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "ddprm/posterior.hpp"
#include "support.hpp"

using namespace ddprm;

namespace {

double trapezoid(const DensityEstimate& d) {
  double mass = 0.0;
  for (std::size_t i = 1; i < d.grid.size(); ++i) {
    mass += 0.5 * (d.grid[i] - d.grid[i - 1]) *
            (d.density[i] + d.density[i - 1]);
  }
  return mass;
}

// archive whose six observations split between atoms at -1 and 1
PosteriorArchive two_atom_archive() {
  const RatingDataset data =
      testing::single_item_dataset({0, 1, 1, 0, 1, 0}, 1);
  PosteriorArchive a = testing::mixture_archive_shell(data);
  ArchiveState s;
  s.theta.assign(6, 0.0);
  s.sigma2 = 1.0;
  s.gamma = {2.0};
  s.psi = {1.0};
  s.fixed_item_tau = {{}};
  s.ypred.assign(6, 0);
  s.components.push_back({1, 0.5, {-1.0}});
  s.components.push_back({2, 0.5, {1.0}});
  s.components.push_back({3, 0.5, {0.0}});
  for (int rep = 0; rep < 4; ++rep) {
    s.z = {1, 1, 1, 1, 2, 2};
    a.add_state(s);
  }
  return a;
}

}  // namespace

TEST_CASE("weighted kde integrates to one") {
  RngStream gen(13);
  std::vector<double> values;
  std::vector<double> weights;
  for (int i = 0; i < 200; ++i) {
    values.push_back(gen.normal(0.0, 2.0));
    weights.push_back(gen.uniform(0.5, 3.0));
  }
  const DensityEstimate d = weighted_kde(values, weights);
  CHECK(trapezoid(d) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(d.bandwidth > 0.0);
  REQUIRE(d.grid.size() == 512);
}

TEST_CASE("kde of a point mass stays a proper density") {
  const std::vector<double> values = {2.5};
  const std::vector<double> weights = {1.0};
  const DensityEstimate d = weighted_kde(values, weights);
  CHECK(trapezoid(d) == doctest::Approx(1.0).epsilon(1e-3));
  REQUIRE(d.mode_locations.size() == 1);
  CHECK(d.mode_locations[0] == doctest::Approx(2.5).epsilon(1e-3));
}

TEST_CASE("kde separates well-spaced clusters into modes") {
  std::vector<double> values;
  std::vector<double> weights;
  RngStream gen(21);
  for (int i = 0; i < 300; ++i) {
    values.push_back(gen.normal(i % 2 == 0 ? 0.0 : 2.0, 0.05));
    weights.push_back(1.0);
  }
  const DensityEstimate d = weighted_kde(values, weights);
  REQUIRE(d.mode_locations.size() >= 2);
  // the two tallest modes sit near the cluster centers
  const double lo = std::min(d.mode_locations[0], d.mode_locations[1]);
  const double hi = std::max(d.mode_locations[0], d.mode_locations[1]);
  CHECK(lo == doctest::Approx(0.0).epsilon(0.1));
  CHECK(hi == doctest::Approx(2.0).epsilon(0.1));
  CHECK(d.mode_heights[0] >= d.mode_heights[1]);
}

TEST_CASE("mode finding respects plateaus and the height floor") {
  DensityEstimate d;
  for (int i = 0; i < 11; ++i) d.grid.push_back(static_cast<double>(i));
  d.density = {0.0, 1.0, 0.2, 0.5, 0.5, 0.5, 0.2, 0.04, 0.3, 0.04, 0.0};
  find_modes(d, 0.05);
  REQUIRE(d.mode_locations.size() == 3);
  CHECK(d.mode_locations[0] == 1.0);   // tallest first
  CHECK(d.mode_locations[1] == 4.0);   // plateau collapses to its middle
  CHECK(d.mode_locations[2] == 8.0);

  find_modes(d, 0.4);
  REQUIRE(d.mode_locations.size() == 2);  // floor drops the 0.3 bump

  DensityEstimate flat;
  flat.grid = {0.0, 1.0, 2.0};
  flat.density = {0.2, 0.2, 0.2};
  find_modes(flat, 0.05);
  CHECK(flat.mode_locations.empty());
}

TEST_CASE("summary statistics at a frozen vector") {
  std::vector<double> v;
  for (int i = 10; i >= 1; --i) v.push_back(static_cast<double>(i));
  const SummaryStats s = summarize(v);
  CHECK(s.mean == doctest::Approx(5.5).epsilon(1e-15));
  CHECK(s.sd == doctest::Approx(2.8722813232690143).epsilon(1e-12));
  CHECK(s.median == doctest::Approx(5.5).epsilon(1e-15));
  CHECK(s.q025 == doctest::Approx(1.225).epsilon(1e-12));
  CHECK(s.q975 == doctest::Approx(9.775).epsilon(1e-12));
  CHECK(s.n == 10);
}

TEST_CASE("batch means demands a workable trace") {
  CHECK_THROWS_AS(batch_means_halfwidth(std::vector<double>{1.0, 2.0}),
                  std::invalid_argument);
  std::vector<double> trace;
  RngStream gen(1);
  for (int i = 0; i < 400; ++i) trace.push_back(gen.normal(0.0, 1.0));
  CHECK(batch_means_halfwidth(trace) > 0.0);
  // wider confidence widens the interval
  CHECK(batch_means_halfwidth(trace, 0.99) >
        batch_means_halfwidth(trace, 0.90));
}

TEST_CASE("trace extraction addresses every selector") {
  const PosteriorArchive a = two_atom_archive();
  CHECK(extract_trace(a, "sigma2").size() == 4);
  CHECK(extract_trace(a, "alpha")[0] == a.state(0).alpha);
  CHECK(extract_trace(a, "loglik").size() == 4);
  CHECK(extract_trace(a, "theta[2]")[0] == a.state(0).theta[1]);
  CHECK(extract_trace(a, "gamma[1]")[0] == 2.0);
  CHECK(extract_trace(a, "psi[1]")[0] == 1.0);
  CHECK_THROWS_AS(extract_trace(a, "theta[99]"), std::invalid_argument);
  CHECK_THROWS_AS(extract_trace(a, "nonsense"), std::invalid_argument);
  // the single item is a mixture item, so it has no fixed thresholds
  CHECK_THROWS_AS(extract_trace(a, "tau_fixed[1][1]"),
                  std::invalid_argument);

  const RatingDataset data = testing::grid_dataset({{1}, {0}}, {1});
  PosteriorArchive fixed = testing::fixed_archive_shell(data);
  ArchiveState s;
  s.theta = {0.0, 0.0};
  s.fixed_item_tau = {{0.7}};
  s.ypred = {0, 0};
  fixed.add_state(s);
  CHECK(extract_trace(fixed, "tau_fixed[1][1]")[0] == 0.7);
}

TEST_CASE("trace export writes one column per selector") {
  const PosteriorArchive a = two_atom_archive();
  testing::TempDir tmp("traces");
  const std::string path = tmp.file("t.csv");
  export_traces(a, {"sigma2", "theta[1]"}, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "sigma2,theta[1]");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("predictive moments reduce to the kernel for a point archive") {
  const PosteriorArchive a = two_atom_archive();
  // all states identical, so the spread term vanishes
  const auto [mean, var] = predictive_mean_var(a, 4);
  const auto [km, kv] = pcm_mean_var(0.0, {1.0});
  CHECK(mean == doctest::Approx(km).epsilon(1e-13));
  CHECK(var == doctest::Approx(kv).epsilon(1e-13));
}

TEST_CASE("predictive pmf mixes kernels by pattern weight") {
  const PosteriorArchive a = two_atom_archive();
  const std::vector<double> pmf = predictive_pmf(a, 0, 0.0);
  REQUIRE(pmf.size() == 2);
  double sum = 0.0;
  for (double p : pmf) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // weights at the pattern location: subset {1..3}, sticks 0.5/0.5/forced
  double manual = 0.0;
  const double w[3] = {0.5, 0.25, 0.25};
  const double tau[3] = {-1.0, 1.0, 0.0};
  for (int l = 0; l < 3; ++l) {
    manual += w[l] * pcm_distribution(0.0, {tau[l]})[1];
  }
  CHECK(pmf[1] == doctest::Approx(manual).epsilon(1e-12));

  RngStream gen(2);
  const std::vector<double> marginal = predictive_pmf(a, 0, {}, &gen);
  double msum = 0.0;
  for (double p : marginal) msum += p;
  CHECK(msum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixing density recovers the allocation-weighted atoms") {
  const PosteriorArchive a = two_atom_archive();
  const DensityEstimate d = mixing_density(a, 0, 0);
  REQUIRE(d.mode_locations.size() >= 2);
  // four of six observations sit at -1, the rest at 1
  CHECK(d.mode_locations[0] == doctest::Approx(-1.0).epsilon(0.05));
  CHECK(d.mode_locations[1] == doctest::Approx(1.0).epsilon(0.05));
  CHECK(d.mode_heights[0] > d.mode_heights[1]);
}
