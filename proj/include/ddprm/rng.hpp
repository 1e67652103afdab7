#ifndef DDPRM_RNG_HPP
#define DDPRM_RNG_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace ddprm {

// Deterministic random stream. All draws reduce to the mt19937_64 state, so
// saving and restoring that state reproduces a run bit for bit. Distribution
// objects are constructed per call and never cache across calls.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  // Derives an independent stream for one chain of a multi-chain run.
  static RngStream for_chain(std::uint64_t seed, int chain_id);

  // uniform on the open interval (0, 1)
  double uniform();
  double uniform(double a, double b);
  double normal(double mean, double sd);
  // shape/rate parameterization
  double gamma_rate(double shape, double rate);
  double inv_gamma(double shape, double rate);
  double beta(double a, double b);
  std::uint64_t next_u64() { return gen_(); }

  // Draws an index proportional to exp(logw[l]).
  int categorical_from_log(std::span<const double> logw);

  std::string save_state() const;
  void load_state(const std::string& text);

 private:
  std::mt19937_64 gen_;
};

// splitmix64 step, used for seed derivation
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace ddprm

#endif
