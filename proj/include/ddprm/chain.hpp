#ifndef DDPRM_CHAIN_HPP
#define DDPRM_CHAIN_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddprm/adaptive.hpp"
#include "ddprm/archive.hpp"
#include "ddprm/dataset.hpp"
#include "ddprm/model_core.hpp"
#include "ddprm/priors.hpp"
#include "ddprm/rng.hpp"

namespace ddprm {

// Slice variables of the mixture observations. u is stored on the log scale
// because the comparison u < exp(-h) must stay exact for addresses far
// beyond the underflow point of exp(-h).
struct LatentState {
  std::vector<double> log_u;
  std::vector<std::int32_t> z;
};

struct ChainState {
  std::vector<double> theta;
  double sigma2 = 1.0;
  double alpha = 1.0;
  StickBreakState sb;
  std::vector<ThresholdVector> fixed_item_tau;  // per item, empty when mixed
  LatentState latents;
};

struct ChainConfig {
  std::int64_t iterations = 1000;
  std::int64_t burnin = 0;
  std::int64_t thin = 1;
  std::uint64_t seed = 1;
  int chain_id = 0;
  std::int64_t progress_every = 0;
  std::ostream* progress_stream = nullptr;
  std::int64_t checkpoint_every = 0;
  std::string checkpoint_path;

  void validate() const;
};

struct EngineOptions {
  enum class Weights { localized, global };
  // localized: covariate-dependent neighborhoods with a forced final stick.
  // global: one covariate-free stick-breaking sequence over all addresses.
  Weights weights = Weights::localized;

  // Target used by the coefficient and width moves. local_weights scores the
  // allocations through the localized weights; global_prefix scores them
  // through the raw stick prefix products (membership still restricts moves
  // to neighborhoods containing every allocation).
  enum class CoefficientTarget { local_weights, global_prefix };
  CoefficientTarget coef_target = CoefficientTarget::local_weights;

  double init_step_theta = 1.0;
  double init_step_tau = 0.5;
  double init_step_gamma = 2.0;
  double init_step_psi = 1.0;
};

// Diagnostics of one concentration update.
struct EscobarWestDraw {
  double eta = 0.0;
  double u = 0.0;
  double odds = 0.0;
  int n_components = 0;
  double shape = 0.0;
  double rate = 0.0;
  double alpha = 0.0;
};

// Largest address h >= 1 whose slice survives log u < -h; 0 when none does.
int slice_bound(double log_u);
// Truncation index implied by the current slice variables.
int compute_n_max(const std::vector<double>& log_u);

// Mixing arithmetic of the concentration update, split out so the odds,
// shape, and rate can be checked against hand computation. n is the number
// of mixture observations and eta, u the auxiliary draws.
EscobarWestDraw escobar_west_update(double alpha_shape, double alpha_rate,
                                    int n, int n_components, double eta,
                                    double u);

class SliceSampler {
 public:
  SliceSampler(RatingDataset data, HyperParams hyper, EngineOptions opts,
               std::uint64_t seed, int chain_id = 0);

  // one sweep of the augmented sampler
  void iterate();

  // individual conditional updates, exposed for verification
  void sample_slice_u();
  void sample_allocation_z();
  void sample_theta();
  void sample_sigma2();
  void sample_gamma();
  void sample_psi();
  void sample_tau();
  void sample_upsilon();
  std::optional<EscobarWestDraw> sample_alpha();

  PosteriorArchive run(const ChainConfig& cfg);

  // log of the augmented joint over the mixture observations
  double joint_augmented_loglik() const;
  // complete-data log likelihood of every observation at the current state
  double complete_loglik() const;

  // conjugate conditional parameters, exposed for verification
  std::pair<double, double> sigma2_conditional() const;  // shape, rate
  std::pair<double, double> upsilon_conditional(int h) const;  // a, b

  int n_max() const;

  ChainState& state() { return st_; }
  const ChainState& state() const { return st_; }
  // Recomputes every derived cache from st_. Call after editing the state
  // from outside; validates that allocations sit inside their neighborhoods.
  void rebuild_caches();

  const RatingDataset& data() const { return data_; }
  const HyperParams& hyper() const { return hyper_; }
  const EngineOptions& options() const { return opts_; }
  RngStream& rng() { return rng_; }

  int num_patterns() const { return static_cast<int>(patterns_.size()); }
  const CovariateVector& pattern(int q) const {
    return patterns_[static_cast<std::size_t>(q)];
  }
  double pattern_location(int q) const;
  const LocalSubset& pattern_subset(int q) const {
    return subsets_[static_cast<std::size_t>(q)];
  }
  // log mixing weights of one pattern, aligned with its subset
  const std::vector<double>& pattern_log_weights(int q) const {
    return logw_[static_cast<std::size_t>(q)];
  }
  const std::vector<int>& mixture_obs() const { return mixture_obs_; }
  int common_m() const { return common_m_; }

  void set_adapting(bool on) { adapting_ = on; }
  bool adapting() const { return adapting_; }
  AdaptiveScale& theta_scale(int t) {
    return sc_theta_[static_cast<std::size_t>(t)];
  }
  AdaptiveScale& gamma_scale(int j) {
    return sc_gamma_[static_cast<std::size_t>(j)];
  }
  AdaptiveScale& psi_scale(int q) {
    return sc_psi_[static_cast<std::size_t>(q)];
  }
  AdaptiveScale& tau_scale(int h, int coord);
  AdaptiveScale& fixed_tau_scale(int item, int coord);
  std::map<std::string, double> acceptance_rates() const;

 private:
  void build_layout();
  void init_state();
  void refresh_pattern_caches();
  void rebuild_allocation_index();
  void ensure_component(int h);
  void ensure_global_upto(int h);
  void prune_components();
  double examinee_loglik(int t, double theta) const;
  double allocation_score_localized(
      const std::vector<LocalSubset>& subsets,
      const std::vector<std::vector<double>>& logw) const;
  bool allocations_inside(const std::vector<LocalSubset>& subsets) const;
  double stick_prefix_score() const;
  ArchiveState snapshot();
  PosteriorArchive make_shell(const ChainConfig& cfg) const;
  int count_z_greater(int h) const;

  RatingDataset data_;
  HyperParams hyper_;
  EngineOptions opts_;
  RngStream rng_;

  std::vector<int> mixture_obs_;       // dataset obs indices of mixture items
  std::vector<int> slice_of_obs_;      // obs -> position in mixture_obs_, -1
  std::vector<int> pattern_of_slice_;  // slice obs -> pattern
  std::vector<int> pattern_of_obs_;    // obs -> pattern, -1 for fixed items
  std::vector<CovariateVector> patterns_;
  std::vector<int> pattern_item_;
  std::vector<std::vector<int>> obs_of_examinee_;
  std::vector<std::vector<int>> fixed_obs_of_item_;
  int common_m_ = 0;
  int num_covariates_ = 0;

  ChainState st_;

  std::vector<LocalSubset> subsets_;        // per pattern, localized mode
  std::vector<std::vector<double>> logw_;   // per pattern, localized mode
  std::vector<double> global_logw_;         // address h at index h-1
  std::map<int, std::vector<int>> members_; // component -> slice obs
  std::vector<std::map<int, int>> alloc_;   // per pattern: address -> count
  std::vector<int> sorted_z_;

  std::vector<AdaptiveScale> sc_theta_;
  std::vector<AdaptiveScale> sc_gamma_;
  std::vector<AdaptiveScale> sc_psi_;
  std::map<int, std::vector<AdaptiveScale>> sc_tau_;
  std::vector<std::vector<AdaptiveScale>> sc_fixed_tau_;
  bool adapting_ = true;
};

// Runs one chain to completion and returns its archive.
PosteriorArchive run_chain(const RatingDataset& data, const HyperParams& hyper,
                           const ChainConfig& cfg, EngineOptions opts = {});

}  // namespace ddprm

#endif
