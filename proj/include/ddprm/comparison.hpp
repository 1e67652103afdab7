#ifndef DDPRM_COMPARISON_HPP
#define DDPRM_COMPARISON_HPP

#include <string>
#include <vector>

#include "ddprm/archive.hpp"
#include "ddprm/chain.hpp"
#include "ddprm/posterior.hpp"

namespace ddprm {

// Per-observation posterior predictive moments of one fitted model, the
// common currency of model comparison. Tables can also be imported from
// other software.
struct PredictionTable {
  std::string label;
  std::vector<int> y;
  std::vector<double> expectation;
  std::vector<double> variance;

  std::size_t size() const { return y.size(); }
  void validate() const;
};

// Squared-error predictive criterion: goodness of fit plus a variance
// penalty, lower is better.
struct DCriterionResult {
  double goodness_of_fit = 0.0;
  double penalty = 0.0;
  double d = 0.0;
};

DCriterionResult d_criterion(const PredictionTable& table);

// Builds the table for a fitted archive.
PredictionTable prediction_table(const PosteriorArchive& a,
                                 std::string label);

// Per-state criterion contributions D^(s). Their average equals the
// criterion of prediction_table(a), which makes batch means on this trace
// the Monte Carlo uncertainty of the criterion itself.
std::vector<double> d_criterion_trace(const PosteriorArchive& a);

// CSV exchange format: header obs_index,y,E,Var with 1-based obs_index.
PredictionTable import_external_predictions(const std::string& path,
                                            std::string label = "");
void export_predictions(const PredictionTable& table,
                        const std::string& path);

struct ModelComparison {
  struct Entry {
    std::string label;
    DCriterionResult d;
  };
  std::vector<Entry> entries;  // sorted by criterion, best first
};

// Ranks tables by their criterion. All tables must describe the same
// observations.
ModelComparison compare_models(const std::vector<PredictionTable>& tables);

struct BaselineResult {
  PosteriorArchive archive;
  PredictionTable table;
  DCriterionResult d;
  double d_halfwidth = 0.0;
};

// Covariate-free single-threshold-set baseline: every item keeps its own
// fixed thresholds, no mixture structure.
BaselineResult fit_pcm_baseline(const RatingDataset& data,
                                const HyperParams& hyper,
                                const ChainConfig& cfg);

// Exchangeable stick-breaking baseline: every item draws thresholds from
// one shared global mixture with no covariate dependence.
BaselineResult fit_dp_pcm_baseline(const RatingDataset& data,
                                   const HyperParams& hyper,
                                   const ChainConfig& cfg);

}  // namespace ddprm

#endif
