#include <doctest.h>

#include <cmath>

#include "ddprm/common.hpp"
#include "ddprm/simulate.hpp"
#include "support.hpp"

using namespace ddprm;

TEST_CASE("builtin scenarios validate") {
  const SimConfig paper = SimConfig::paper_grid();
  paper.validate();
  CHECK(paper.num_examinees == 3000);
  CHECK(paper.num_items == 10);
  CHECK(paper.cluster_item_tau[0][9] == ThresholdVector{-1.25, 0.0});
  CHECK(paper.cluster_item_tau[1][9] == ThresholdVector{-1.25, 2.0});
  // the non-studied items agree across clusters
  for (int j = 0; j < 9; ++j) {
    CHECK(paper.cluster_item_tau[0][static_cast<std::size_t>(j)] ==
          paper.cluster_item_tau[1][static_cast<std::size_t>(j)]);
  }

  const SimConfig small = SimConfig::small_dif();
  small.validate();
  CHECK(small.num_examinees == 500);
  CHECK(small.num_items == 5);
  CHECK(small.cluster_item_tau[0][4] == ThresholdVector{-1.25, 0.0});
  CHECK(small.cluster_item_tau[1][4] == ThresholdVector{-1.25, 2.0});

  SimConfig bad = small;
  bad.cluster_probs = {0.6, 0.6};
  CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("generation is deterministic and complete") {
  const SimConfig cfg = SimConfig::small_dif();
  const auto [d1, t1] = generate(cfg);
  const auto [d2, t2] = generate(cfg);
  CHECK(d1.obs.size() == 2500);
  CHECK(d1.num_examinees == 500);
  REQUIRE(d1.obs.size() == d2.obs.size());
  for (std::size_t i = 0; i < d1.obs.size(); ++i) {
    CHECK(d1.obs[i].rating == d2.obs[i].rating);
  }
  CHECK(t1.theta == t2.theta);
  CHECK(t1.cluster == t2.cluster);
  CHECK(t1.theta.size() == 500);

  // cluster shares near the configured probabilities
  double ones = 0.0;
  for (int c : t1.cluster) ones += c;
  CHECK(ones / 500.0 == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("degenerate generator matches the kernel frequencies") {
  SimConfig cfg;
  cfg.num_examinees = 30000;
  cfg.num_items = 1;
  cfg.max_category = 2;
  cfg.ability_variance = 1e-12;
  cfg.cluster_probs = {1.0};
  cfg.cluster_item_tau = {{{0.0, 0.0}}};
  cfg.seed = 5;
  const auto [data, truth] = generate(cfg);
  std::vector<double> freq(3, 0.0);
  for (const Observation& o : data.obs) {
    freq[static_cast<std::size_t>(o.rating)] += 1.0;
  }
  // zero thresholds at theta 0 put equal mass on all three categories
  for (int k = 0; k <= 2; ++k) {
    CHECK(freq[static_cast<std::size_t>(k)] / 30000.0 ==
          doctest::Approx(1.0 / 3.0).epsilon(0.03));
  }
}

TEST_CASE("truth round trips through json") {
  const auto [data, truth] = generate(SimConfig::small_dif());
  testing::TempDir tmp("truth_rt");
  const std::string path = tmp.file("truth.json");
  save_truth(truth, path);
  const SimTruth back = load_truth(path);
  CHECK(back.seed == truth.seed);
  CHECK(back.ability_variance == truth.ability_variance);
  CHECK(back.cluster_probs == truth.cluster_probs);
  CHECK(back.cluster_item_tau == truth.cluster_item_tau);
  CHECK(back.theta == truth.theta);
  CHECK(back.cluster == truth.cluster);

  CHECK_THROWS_AS(load_truth(tmp.file("absent.json")), config_error);
}

TEST_CASE("recovery scoring measures atom distance on a point archive") {
  const RatingDataset data =
      testing::single_item_dataset({0, 1, 1, 0}, 1);
  PosteriorArchive a = testing::mixture_archive_shell(data);
  ArchiveState s;
  s.theta.assign(4, 0.0);
  s.gamma = {2.0};
  s.psi = {1.0};
  s.fixed_item_tau = {{}};
  s.ypred.assign(4, 0);
  s.components.push_back({1, 0.5, {-0.8}});
  s.components.push_back({2, 0.5, {0.8}});
  s.z = {1, 1, 2, 2};
  a.add_state(s);
  a.add_state(s);

  SimTruth truth;
  truth.cluster_probs = {0.5, 0.5};
  truth.cluster_item_tau = {{{-0.8}}, {{0.8}}};

  const RecoveryReport rep = score_recovery(truth, a);
  REQUIRE(rep.items.size() == 1);
  REQUIRE(rep.items[0].thresholds.size() == 1);
  const RecoveryThreshold& rt = rep.items[0].thresholds[0];
  CHECK(rt.true_values == std::vector<double>{-0.8, 0.8});
  CHECK(rt.max_abs_error < 0.1);
  CHECK(rep.max_abs_error < 0.1);
}
