#ifndef DDPRM_DATASET_HPP
#define DDPRM_DATASET_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "ddprm/model_core.hpp"

namespace ddprm {

// One scored response. Indices are 0-based internally; CSV files use 1-based
// examinee and item labels.
struct Observation {
  int examinee = 0;
  int item = 0;
  int rating = 0;
};

enum class CovariateDesign { item_dummy, explicit_columns };

// Long-format rating data plus the covariate design. Under the dummy design
// x_i is the indicator row of the observation's item, so p equals the number
// of items; under an explicit design the covariate columns come from the
// file.
struct RatingDataset {
  std::vector<Observation> obs;
  int num_examinees = 0;
  int num_items = 0;
  std::vector<int> max_category;  // m_j per item
  CovariateDesign design = CovariateDesign::item_dummy;
  int num_covariates = 0;
  std::vector<CovariateVector> covariate_rows;  // per obs, explicit design only

  const CovariateVector& covariates(int obs_index) const;
  void validate() const;

  static RatingDataset from_csv(const std::string& path,
                                CovariateDesign design);
  static RatingDataset from_stream(std::istream& in, CovariateDesign design,
                                   const std::string& origin);
  void to_csv(const std::string& path) const;

 private:
  mutable std::vector<CovariateVector> dummy_rows_;  // lazily built unit rows
};

}  // namespace ddprm

#endif
