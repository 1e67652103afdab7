#ifndef DDPRM_TESTS_SUPPORT_HPP
#define DDPRM_TESTS_SUPPORT_HPP

// helpers shared by the unit, statistical, and acceptance suites

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "ddprm/archive.hpp"
#include "ddprm/dataset.hpp"
#include "ddprm/model_core.hpp"

namespace ddprm::testing {

// complete rating grid: ratings[t][j] for examinee t, item j
inline RatingDataset grid_dataset(const std::vector<std::vector<int>>& ratings,
                                  const std::vector<int>& max_cat) {
  RatingDataset d;
  d.num_examinees = static_cast<int>(ratings.size());
  d.num_items = static_cast<int>(max_cat.size());
  d.max_category = max_cat;
  d.design = CovariateDesign::item_dummy;
  d.num_covariates = d.num_items;
  for (int t = 0; t < d.num_examinees; ++t) {
    for (int j = 0; j < d.num_items; ++j) {
      d.obs.push_back({t, j, ratings[static_cast<std::size_t>(t)]
                                    [static_cast<std::size_t>(j)]});
    }
  }
  d.validate();
  return d;
}

// single-item dataset, one observation per examinee
inline RatingDataset single_item_dataset(const std::vector<int>& ratings,
                                         int max_cat) {
  std::vector<std::vector<int>> grid;
  grid.reserve(ratings.size());
  for (int y : ratings) grid.push_back({y});
  return grid_dataset(grid, {max_cat});
}

// archive shell over a dataset whose single item is a mixture item
inline PosteriorArchive mixture_archive_shell(const RatingDataset& data) {
  std::vector<int> mixture_obs;
  std::vector<int> pattern_of_obs(data.obs.size(), 0);
  for (std::size_t i = 0; i < data.obs.size(); ++i) {
    mixture_obs.push_back(static_cast<int>(i));
  }
  RunInfo info;
  info.seed = 1;
  info.iterations = 0;
  return PosteriorArchive(data, std::move(mixture_obs),
                          std::move(pattern_of_obs), {{1.0}}, {0},
                          info);
}

// archive shell with every item fixed
inline PosteriorArchive fixed_archive_shell(const RatingDataset& data) {
  RunInfo info;
  info.seed = 1;
  info.iterations = 0;
  return PosteriorArchive(data, {}, std::vector<int>(data.obs.size(), -1),
                          {}, {}, info);
}

// normalized posterior on a grid, from an unnormalized log target
struct GridPosterior {
  std::vector<double> grid;
  std::vector<double> pdf;
  std::vector<double> cdf;
};

inline GridPosterior quadrature_posterior(
    double lo, double hi, int n,
    const std::function<double(double)>& log_target) {
  GridPosterior g;
  g.grid.resize(static_cast<std::size_t>(n));
  g.pdf.resize(static_cast<std::size_t>(n));
  const double step = (hi - lo) / (n - 1);
  double mx = -1e300;
  for (int i = 0; i < n; ++i) {
    g.grid[static_cast<std::size_t>(i)] = lo + step * i;
    const double lt = log_target(g.grid[static_cast<std::size_t>(i)]);
    g.pdf[static_cast<std::size_t>(i)] = lt;
    mx = std::max(mx, lt);
  }
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    double& p = g.pdf[static_cast<std::size_t>(i)];
    p = std::exp(p - mx);
    mass += (i == 0 || i == n - 1) ? 0.5 * p : p;
  }
  mass *= step;
  g.cdf.resize(static_cast<std::size_t>(n), 0.0);
  double run = 0.0;
  for (int i = 0; i < n; ++i) {
    g.pdf[static_cast<std::size_t>(i)] /= mass;
    if (i > 0) {
      run += 0.5 * step *
             (g.pdf[static_cast<std::size_t>(i)] +
              g.pdf[static_cast<std::size_t>(i - 1)]);
    }
    g.cdf[static_cast<std::size_t>(i)] = std::min(run, 1.0);
  }
  return g;
}

// Kolmogorov distance between an empirical sample and a grid cdf
inline double ks_distance(std::vector<double> draws, const GridPosterior& g) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < g.grid.size(); ++i) {
    const auto it =
        std::upper_bound(draws.begin(), draws.end(), g.grid[i]);
    const double emp = static_cast<double>(it - draws.begin()) / n;
    worst = std::max(worst, std::abs(emp - g.cdf[i]));
  }
  return worst;
}

// unique scratch directory removed on destruction
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const auto base = std::filesystem::temp_directory_path();
    path_ = (base / (tag + "_" + std::to_string(::getpid()) + "_" +
                     std::to_string(counter++)))
                .string();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const {
    return path_ + "/" + name;
  }

 private:
  std::string path_;
};

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ddprm::testing

#endif
