#ifndef DDPRM_ADAPTIVE_HPP
#define DDPRM_ADAPTIVE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace ddprm {

// Random-walk proposal scale with batch adaptation. Every 50 proposals the
// log step moves by min(0.01, 1/sqrt(batch)) toward a 0.44 acceptance rate.
// Adaptation only runs while enabled; the step is frozen afterwards but
// acceptance keeps being counted.
class AdaptiveScale {
 public:
  explicit AdaptiveScale(double initial_step)
      : log_step_(std::log(initial_step)) {}

  double step() const { return std::exp(log_step_); }
  double log_step() const { return log_step_; }

  void record(bool accepted, bool adapting) {
    ++proposals_;
    if (accepted) ++accepts_;
    if (!adapting) return;
    ++batch_n_;
    if (accepted) ++batch_acc_;
    if (batch_n_ == batch_size) {
      ++batches_;
      const double rate =
          static_cast<double>(batch_acc_) / static_cast<double>(batch_size);
      const double delta =
          std::min(0.01, 1.0 / std::sqrt(static_cast<double>(batches_)));
      log_step_ += rate > target ? delta : -delta;
      batch_n_ = 0;
      batch_acc_ = 0;
    }
  }

  double acceptance_rate() const {
    return proposals_ == 0
               ? 0.0
               : static_cast<double>(accepts_) /
                     static_cast<double>(proposals_);
  }
  std::int64_t proposals() const { return proposals_; }

  static constexpr int batch_size = 50;
  static constexpr double target = 0.44;

 private:
  double log_step_;
  std::int64_t proposals_ = 0;
  std::int64_t accepts_ = 0;
  std::int64_t batches_ = 0;
  int batch_n_ = 0;
  int batch_acc_ = 0;
};

}  // namespace ddprm

#endif
