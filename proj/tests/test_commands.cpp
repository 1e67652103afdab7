#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ddprm/archive.hpp"
#include "ddprm/commands.hpp"
#include "support.hpp"

using namespace ddprm;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

int run_simulate(const SimulateArgs& args) {
  std::ostringstream out, err;
  const int rc = cmd_simulate(args, out, err);
  INFO(err.str());
  return rc;
}

}  // namespace

TEST_CASE("simulate writes the dataset and the truth") {
  testing::TempDir tmp("cmd_sim");
  SimulateArgs args;
  args.preset = "small-dif";
  args.out_dir = tmp.path();
  CHECK(run_simulate(args) == 0);
  CHECK(std::filesystem::exists(tmp.file("dataset.csv")));
  CHECK(std::filesystem::exists(tmp.file("truth.json")));

  const RatingDataset d =
      RatingDataset::from_csv(tmp.file("dataset.csv"),
                              CovariateDesign::item_dummy);
  CHECK(d.num_examinees == 500);
  CHECK(d.num_items == 5);

  // rerunning with the same seed rewrites identical bytes
  const std::string before = slurp(tmp.file("dataset.csv"));
  CHECK(run_simulate(args) == 0);
  CHECK(slurp(tmp.file("dataset.csv")) == before);
}

TEST_CASE("simulate honors size overrides") {
  testing::TempDir tmp("cmd_sim_size");
  SimulateArgs args;
  args.preset = "paper-sim";
  args.examinees = 40;
  args.items = 3;
  args.seed = 9;
  args.out_dir = tmp.path();
  CHECK(run_simulate(args) == 0);
  const RatingDataset d =
      RatingDataset::from_csv(tmp.file("dataset.csv"),
                              CovariateDesign::item_dummy);
  CHECK(d.num_examinees == 40);
  CHECK(d.num_items == 3);
  CHECK(d.obs.size() == 120);
}

TEST_CASE("simulate fails cleanly without an output directory") {
  SimulateArgs args;
  args.out_dir = "/definitely/not/here";
  std::ostringstream out, err;
  CHECK(cmd_simulate(args, out, err) == 2);
  CHECK(err.str().find("output directory") != std::string::npos);

  SimulateArgs unknown;
  unknown.preset = "mystery";
  unknown.out_dir = ".";
  CHECK(cmd_simulate(unknown, out, err) == 2);
}

TEST_CASE("fit runs end to end and its outputs load back") {
  testing::TempDir tmp("cmd_fit");
  SimulateArgs sim;
  sim.preset = "small-dif";
  sim.examinees = 60;
  sim.out_dir = tmp.path();
  REQUIRE(run_simulate(sim) == 0);

  FitArgs fit;
  fit.preset = "paper-sim";
  fit.data_path = tmp.file("dataset.csv");
  fit.iterations = 300;
  fit.burnin = 100;
  fit.thin = 2;
  fit.seed = 4;
  fit.out_dir = tmp.path();
  fit.overrides = {"items.mixed = 5"};
  std::ostringstream out, err;
  REQUIRE(cmd_fit(fit, out, err) == 0);
  INFO(err.str());

  const PosteriorArchive a = PosteriorArchive::load(tmp.file("archive.bin"));
  CHECK(a.size() == 100);
  CHECK(a.info().seed == 4);
  CHECK(std::filesystem::exists(tmp.file("summary.json")));
  CHECK(std::filesystem::exists(tmp.file("predictions.csv")));
  CHECK(std::filesystem::exists(tmp.file("traces.csv")));
  CHECK(std::filesystem::exists(tmp.file("densities/item5_tau1.csv")));
  CHECK(out.str().find("archive") != std::string::npos);
}

TEST_CASE("fit splits seeds across chains") {
  testing::TempDir tmp("cmd_fit_chains");
  SimulateArgs sim;
  sim.preset = "small-dif";
  sim.examinees = 40;
  sim.out_dir = tmp.path();
  REQUIRE(run_simulate(sim) == 0);

  FitArgs fit;
  fit.preset = "paper-sim";
  fit.data_path = tmp.file("dataset.csv");
  fit.iterations = 120;
  fit.burnin = 40;
  fit.seed = 11;
  fit.chains = 2;
  fit.out_dir = tmp.path();
  fit.overrides = {"items.mixed=5", "out.densities=false"};
  std::ostringstream out, err;
  REQUIRE(cmd_fit(fit, out, err) == 0);

  const PosteriorArchive c0 =
      PosteriorArchive::load(tmp.file("archive_chain0.bin"));
  const PosteriorArchive c1 =
      PosteriorArchive::load(tmp.file("archive_chain1.bin"));
  CHECK(c0.info().chain_id == 0);
  CHECK(c1.info().chain_id == 1);
  CHECK(c0.state(0).sigma2 != c1.state(0).sigma2);
}

TEST_CASE("fit rejects broken configuration up front") {
  std::ostringstream out, err;

  FitArgs nodata;
  nodata.preset = "paper-sim";
  nodata.out_dir = ".";
  CHECK(cmd_fit(nodata, out, err) == 2);

  FitArgs badpreset;
  badpreset.preset = "imaginary";
  badpreset.data_path = "x.csv";
  CHECK(cmd_fit(badpreset, out, err) == 2);

  testing::TempDir tmp("cmd_fit_bad");
  SimulateArgs sim;
  sim.preset = "small-dif";
  sim.examinees = 10;
  sim.out_dir = tmp.path();
  REQUIRE(run_simulate(sim) == 0);

  FitArgs badkey;
  badkey.data_path = tmp.file("dataset.csv");
  badkey.out_dir = tmp.path();
  badkey.overrides = {"prior.sigma.shape=1"};
  CHECK(cmd_fit(badkey, out, err) == 2);

  FitArgs badval;
  badval.data_path = tmp.file("dataset.csv");
  badval.out_dir = tmp.path();
  badval.iterations = 100;
  badval.burnin = 200;
  CHECK(cmd_fit(badval, out, err) == 2);
}

TEST_CASE("compare ranks archives and external tables together") {
  testing::TempDir tmp("cmd_cmp");
  SimulateArgs sim;
  sim.preset = "small-dif";
  sim.examinees = 40;
  sim.out_dir = tmp.path();
  REQUIRE(run_simulate(sim) == 0);

  FitArgs fit;
  fit.preset = "paper-sim";
  fit.data_path = tmp.file("dataset.csv");
  fit.iterations = 200;
  fit.burnin = 100;
  fit.seed = 3;
  fit.out_dir = tmp.path();
  fit.overrides = {"items.mixed=5", "out.densities=false"};
  std::ostringstream fout, ferr;
  REQUIRE(cmd_fit(fit, fout, ferr) == 0);

  CompareArgs cmp;
  cmp.inputs = {"model=" + tmp.file("archive.bin"),
                tmp.file("predictions.csv")};
  cmp.report_path = tmp.file("report.json");
  std::ostringstream out, err;
  REQUIRE(cmd_compare(cmp, out, err) == 0);
  CHECK(out.str().find("model") != std::string::npos);
  CHECK(out.str().find("predictions") != std::string::npos);
  CHECK(std::filesystem::exists(tmp.file("report.json")));

  CompareArgs missing;
  missing.inputs = {tmp.file("nope.bin")};
  CHECK(cmd_compare(missing, out, err) == 2);

  CompareArgs empty;
  CHECK(cmd_compare(empty, out, err) == 2);
}

TEST_CASE("default output directory follows the environment") {
  const char* old = std::getenv("DDPRM_OUT_DIR");
  setenv("DDPRM_OUT_DIR", "/some/where", 1);
  CHECK(default_out_dir() == "/some/where");
  if (old != nullptr) {
    setenv("DDPRM_OUT_DIR", old, 1);
  } else {
    unsetenv("DDPRM_OUT_DIR");
  }
  if (old == nullptr) CHECK(default_out_dir() == ".");
}
