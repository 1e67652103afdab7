#include <doctest.h>

#include <vector>

#include "ddprm/archive.hpp"
#include "ddprm/common.hpp"
#include "support.hpp"

using namespace ddprm;

namespace {

PosteriorArchive sample_archive() {
  const RatingDataset data =
      testing::single_item_dataset({0, 1, 2, 1}, 2);
  PosteriorArchive a = testing::mixture_archive_shell(data);

  ArchiveState s;
  s.theta = {0.1, -0.2, 0.3, 0.0};
  s.sigma2 = 1.5;
  s.alpha = 0.8;
  s.gamma = {2.0};
  s.psi = {1.0};
  s.components.push_back({1, 0.4, {-0.5, 0.5}});
  s.components.push_back({2, 0.7, {1.5, -1.0}});
  s.fixed_item_tau = {{}};
  s.z = {1, 1, 2, 1};
  s.ypred = {0, 1, 2, 2};
  s.loglik = -12.5;
  a.add_state(s);

  s.sigma2 = 2.0;
  s.z = {2, 2, 1, 1};
  a.add_state(s);
  return a;
}

}  // namespace

TEST_CASE("archive round trips through bytes") {
  const PosteriorArchive a = sample_archive();
  const std::vector<std::uint8_t> bytes = a.serialize();
  const PosteriorArchive b = PosteriorArchive::deserialize(bytes);

  REQUIRE(b.size() == a.size());
  CHECK(b.data().obs.size() == a.data().obs.size());
  CHECK(b.state(0).sigma2 == a.state(0).sigma2);
  CHECK(b.state(1).sigma2 == 2.0);
  CHECK(b.state(0).theta == a.state(0).theta);
  CHECK(b.state(0).components.size() == 2);
  CHECK(b.state(0).components[1].tau == a.state(0).components[1].tau);
  CHECK(b.state(0).z == a.state(0).z);
  CHECK(b.state(0).ypred == a.state(0).ypred);
  CHECK(b.num_patterns() == 1);
  CHECK(b.pattern_item(0) == 0);
  CHECK(b.info().seed == a.info().seed);

  // a second serialization is byte identical
  CHECK(b.serialize() == bytes);
}

TEST_CASE("archive file save and load") {
  const PosteriorArchive a = sample_archive();
  testing::TempDir tmp("archive_rt");
  const std::string path = tmp.file("a.bin");
  a.save(path);
  const PosteriorArchive b = PosteriorArchive::load(path);
  CHECK(b.serialize() == a.serialize());
}

TEST_CASE("deserialize rejects foreign bytes") {
  std::vector<std::uint8_t> junk = {'n', 'o', 't', ' ', 'i', 't', '!', '!'};
  junk.resize(64, 0);
  CHECK_THROWS_AS(PosteriorArchive::deserialize(junk), chain_error);

  const PosteriorArchive a = sample_archive();
  std::vector<std::uint8_t> truncated = a.serialize();
  truncated.resize(truncated.size() / 2);
  CHECK_THROWS_AS(PosteriorArchive::deserialize(truncated), chain_error);
}

TEST_CASE("atom lookup and per-observation thresholds") {
  const PosteriorArchive a = sample_archive();
  CHECK(a.state(0).atom(2) == ThresholdVector{1.5, -1.0});
  CHECK_THROWS_AS(a.state(0).atom(9), std::out_of_range);

  // observation 2 sits on component 2 in state 0
  CHECK(a.thresholds_for(0, 2) == ThresholdVector{1.5, -1.0});
  CHECK(a.thresholds_for(1, 2) == ThresholdVector{-0.5, 0.5});
  CHECK(a.is_mixture_obs(2));
  CHECK(a.slice_index(2) == 2);
  CHECK(a.pattern_of_obs(2) == 0);
}

TEST_CASE("fixed-item archive resolves thresholds from the item table") {
  const RatingDataset data = testing::grid_dataset({{1, 0}, {0, 2}}, {1, 2});
  PosteriorArchive a = testing::fixed_archive_shell(data);
  ArchiveState s;
  s.theta = {0.0, 0.5};
  s.fixed_item_tau = {{0.3}, {-0.2, 0.6}};
  s.ypred = {0, 0, 0, 0};
  a.add_state(s);

  CHECK(!a.is_mixture_obs(1));
  CHECK(a.thresholds_for(0, 1) == ThresholdVector{-0.2, 0.6});
  CHECK(a.thresholds_for(0, 0) == ThresholdVector{0.3});
}
