#include <doctest.h>

#include <sstream>

#include "ddprm/common.hpp"
#include "ddprm/dataset.hpp"
#include "support.hpp"

using namespace ddprm;

namespace {

RatingDataset parse(const std::string& text,
                    CovariateDesign design = CovariateDesign::item_dummy) {
  std::istringstream in(text);
  return RatingDataset::from_stream(in, design, "test");
}

}  // namespace

TEST_CASE("dummy-design parsing infers sizes and categories") {
  const RatingDataset d = parse(
      "examinee,item,rating\n"
      "1,1,0\n"
      "1,2,2\n"
      "2,1,1\n"
      "2,2,0\n");
  CHECK(d.num_examinees == 2);
  CHECK(d.num_items == 2);
  REQUIRE(d.obs.size() == 4);
  CHECK(d.obs[1].examinee == 0);
  CHECK(d.obs[1].item == 1);
  CHECK(d.obs[1].rating == 2);
  CHECK(d.max_category[0] == 1);
  CHECK(d.max_category[1] == 2);
  CHECK(d.num_covariates == 2);

  // dummy covariates are unit rows keyed by item
  const CovariateVector& x = d.covariates(1);
  REQUIRE(x.size() == 2);
  CHECK(x[0] == 0.0);
  CHECK(x[1] == 1.0);
}

TEST_CASE("explicit covariate columns ride along each row") {
  const RatingDataset d = parse(
      "examinee,item,rating,x1,x2\n"
      "1,1,1,0.5,1\n"
      "2,1,0,-0.5,2\n",
      CovariateDesign::explicit_columns);
  CHECK(d.num_covariates == 2);
  const CovariateVector& x = d.covariates(1);
  CHECK(x[0] == -0.5);
  CHECK(x[1] == 2.0);
}

TEST_CASE("parse errors carry the offending line") {
  CHECK_THROWS_AS(parse("bogus header\n1,1,0\n"), config_error);
  CHECK_THROWS_AS(parse(""), config_error);
  CHECK_THROWS_AS(parse("examinee,item,rating\n1,1\n"), config_error);
  CHECK_THROWS_AS(parse("examinee,item,rating\n1,1,zebra\n"), config_error);
  CHECK_THROWS_AS(parse("examinee,item,rating\n0,1,1\n"), config_error);

  try {
    parse("examinee,item,rating\n1,1,0\n1,1,oops\n");
    FAIL("expected a parse failure");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }

  // dummy design rejects extra columns
  CHECK_THROWS_AS(parse("examinee,item,rating,x1\n1,1,0,1\n"), config_error);
  // labels must be contiguous from one
  CHECK_THROWS_AS(parse("examinee,item,rating\n1,1,0\n3,1,1\n"),
                  config_error);
}

TEST_CASE("round trip through csv preserves the dataset") {
  const RatingDataset d = testing::grid_dataset(
      {{0, 2}, {1, 1}, {2, 0}}, {2, 2});
  testing::TempDir tmp("dataset_rt");
  const std::string path = tmp.file("data.csv");
  d.to_csv(path);
  const RatingDataset back =
      RatingDataset::from_csv(path, CovariateDesign::item_dummy);
  REQUIRE(back.obs.size() == d.obs.size());
  for (std::size_t i = 0; i < d.obs.size(); ++i) {
    CHECK(back.obs[i].examinee == d.obs[i].examinee);
    CHECK(back.obs[i].item == d.obs[i].item);
    CHECK(back.obs[i].rating == d.obs[i].rating);
  }
  CHECK(back.num_examinees == d.num_examinees);
  CHECK(back.max_category == d.max_category);
}

TEST_CASE("validate rejects inconsistent structures") {
  RatingDataset d = testing::grid_dataset({{0, 1}, {1, 1}}, {1, 1});
  d.obs[0].rating = 9;
  CHECK_THROWS_AS(d.validate(), config_error);

  RatingDataset empty;
  CHECK_THROWS_AS(empty.validate(), config_error);
}
