#ifndef DDPRM_ARCHIVE_HPP
#define DDPRM_ARCHIVE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ddprm/dataset.hpp"
#include "ddprm/model_core.hpp"

namespace ddprm {

struct ArchiveComponent {
  int h = 0;
  double upsilon = 0.0;
  ThresholdVector tau;
};

// One saved posterior state. Components are sorted by address; z holds the
// allocation of every mixture observation in dataset order restricted to
// mixture items; ypred is one posterior predictive rating per observation.
struct ArchiveState {
  std::vector<double> theta;
  double sigma2 = 1.0;
  double alpha = 1.0;
  std::vector<double> gamma;
  std::vector<double> psi;  // one per covariate pattern
  std::vector<ArchiveComponent> components;
  std::vector<ThresholdVector> fixed_item_tau;  // per item, empty when mixed
  std::vector<std::int32_t> z;
  std::vector<std::int16_t> ypred;
  double loglik = 0.0;

  const ThresholdVector& atom(int h) const;
};

// Echo of the run that produced an archive.
struct RunInfo {
  std::uint64_t seed = 0;
  int chain_id = 0;
  std::int64_t iterations = 0;
  std::int64_t burnin = 0;
  std::int64_t thin = 1;
  int weights_mode = 0;  // 0 localized, 1 global
  std::map<std::string, double> acceptance;  // mean rate per block
  std::map<std::string, std::string> extra;
};

// Saved draws of one chain plus the data and index structures needed to
// evaluate predictive quantities later.
class PosteriorArchive {
 public:
  PosteriorArchive() = default;
  PosteriorArchive(RatingDataset data, std::vector<int> mixture_obs,
                   std::vector<int> pattern_of_obs,
                   std::vector<CovariateVector> patterns,
                   std::vector<int> pattern_item, RunInfo info);

  void add_state(ArchiveState s);

  std::size_t size() const { return states_.size(); }
  const ArchiveState& state(std::size_t s) const { return states_[s]; }
  const RatingDataset& data() const { return data_; }
  const RunInfo& info() const { return info_; }
  RunInfo& info() { return info_; }

  // mixture-observation layout (z is indexed by position in mixture_obs)
  const std::vector<int>& mixture_obs() const { return mixture_obs_; }
  bool is_mixture_obs(int obs_index) const {
    return slice_index_[static_cast<std::size_t>(obs_index)] >= 0;
  }
  int slice_index(int obs_index) const {
    return slice_index_[static_cast<std::size_t>(obs_index)];
  }

  int num_patterns() const { return static_cast<int>(patterns_.size()); }
  const CovariateVector& pattern(int q) const {
    return patterns_[static_cast<std::size_t>(q)];
  }
  // item of a pattern under the dummy design, -1 otherwise
  int pattern_item(int q) const {
    return pattern_item_[static_cast<std::size_t>(q)];
  }
  // pattern of a mixture observation, -1 for fixed-item observations
  int pattern_of_obs(int obs_index) const {
    return pattern_of_obs_[static_cast<std::size_t>(obs_index)];
  }

  // thresholds behind observation obs_index in state s, allocated atom for
  // mixture items and the fixed-item vector otherwise
  const ThresholdVector& thresholds_for(std::size_t s, int obs_index) const;

  void save(const std::string& path) const;
  static PosteriorArchive load(const std::string& path);
  std::vector<std::uint8_t> serialize() const;
  static PosteriorArchive deserialize(const std::vector<std::uint8_t>& bytes);

 private:
  RatingDataset data_;
  std::vector<int> mixture_obs_;
  std::vector<int> slice_index_;
  std::vector<int> pattern_of_obs_;
  std::vector<CovariateVector> patterns_;
  std::vector<int> pattern_item_;
  std::vector<ArchiveState> states_;
  RunInfo info_;
};

}  // namespace ddprm

#endif
