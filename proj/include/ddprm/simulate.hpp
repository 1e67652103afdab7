#ifndef DDPRM_SIMULATE_HPP
#define DDPRM_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ddprm/archive.hpp"
#include "ddprm/dataset.hpp"

namespace ddprm {

// Two-cluster (or more) rating generator: abilities are normal, each
// examinee belongs to one latent cluster, and every item has per-cluster
// threshold vectors. Items whose vectors agree across clusters carry no
// differential functioning.
struct SimConfig {
  int num_examinees = 3000;
  int num_items = 10;
  int max_category = 2;
  double ability_variance = 2.25;
  std::vector<double> cluster_probs{0.5, 0.5};
  // cluster_item_tau[c][j] holds item j's thresholds in cluster c
  std::vector<std::vector<ThresholdVector>> cluster_item_tau;
  std::uint64_t seed = 1;

  void validate() const;

  // Evenly spaced threshold grid over ten items with the last item split
  // between clusters at the second step.
  static SimConfig paper_grid();
  // Five-item variant at survey scale: items 1-4 shared, item 5 split.
  static SimConfig small_dif();
};

struct SimTruth {
  std::uint64_t seed = 0;
  double ability_variance = 0.0;
  std::vector<double> cluster_probs;
  std::vector<std::vector<ThresholdVector>> cluster_item_tau;
  std::vector<double> theta;  // per examinee
  std::vector<int> cluster;   // per examinee, 0-based
};

std::pair<RatingDataset, SimTruth> generate(const SimConfig& cfg);

void save_truth(const SimTruth& truth, const std::string& path);
SimTruth load_truth(const std::string& path);

// Recovery scorecard of a fit against simulation truth.
struct RecoveryThreshold {
  int coord = 0;                    // 0-based threshold index
  std::vector<double> true_values;  // distinct values across clusters
  double posterior_mean = 0.0;
  std::vector<double> modes;        // empty for fixed-threshold items
  double max_abs_error = 0.0;       // truth vs nearest mode or mean
};

struct RecoveryItem {
  int item = 0;  // 0-based
  bool mixture = false;
  std::vector<RecoveryThreshold> thresholds;
};

struct RecoveryReport {
  std::vector<RecoveryItem> items;
  double max_abs_error = 0.0;
  std::string to_json() const;
};

RecoveryReport score_recovery(const SimTruth& truth,
                              const PosteriorArchive& archive);

}  // namespace ddprm

#endif
