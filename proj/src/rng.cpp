#include "ddprm/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ddprm/common.hpp"

namespace ddprm {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RngStream RngStream::for_chain(std::uint64_t seed, int chain_id) {
  std::uint64_t s = seed;
  (void)splitmix64(s);
  for (int c = 0; c <= chain_id; ++c) (void)splitmix64(s);
  return RngStream(splitmix64(s));
}

double RngStream::uniform() {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  double v = d(gen_);
  while (v <= 0.0) v = d(gen_);
  return v;
}

double RngStream::uniform(double a, double b) {
  if (!(a <= b)) throw std::invalid_argument("uniform bounds reversed");
  if (a == b) return a;
  std::uniform_real_distribution<double> d(a, b);
  return d(gen_);
}

double RngStream::normal(double mean, double sd) {
  std::normal_distribution<double> d(mean, sd);
  return d(gen_);
}

double RngStream::gamma_rate(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw std::invalid_argument("gamma shape and rate must be positive");
  }
  std::gamma_distribution<double> d(shape, 1.0 / rate);
  return d(gen_);
}

double RngStream::inv_gamma(double shape, double rate) {
  double g = gamma_rate(shape, rate);
  while (g <= 0.0) g = gamma_rate(shape, rate);
  return 1.0 / g;
}

double RngStream::beta(double a, double b) {
  const double x = gamma_rate(a, 1.0);
  const double y = gamma_rate(b, 1.0);
  const double s = x + y;
  if (s <= 0.0) return 0.5;
  return x / s;
}

int RngStream::categorical_from_log(std::span<const double> logw) {
  if (logw.empty()) throw std::invalid_argument("empty categorical support");
  const double lz = log_sum_exp(logw);
  if (!std::isfinite(lz)) {
    throw std::invalid_argument("categorical weights are all zero");
  }
  const double u = uniform();
  double acc = 0.0;
  for (std::size_t l = 0; l < logw.size(); ++l) {
    acc += std::exp(logw[l] - lz);
    if (u <= acc) return static_cast<int>(l);
  }
  return static_cast<int>(logw.size()) - 1;
}

std::string RngStream::save_state() const {
  std::ostringstream os;
  os << gen_;
  return os.str();
}

void RngStream::load_state(const std::string& text) {
  std::istringstream is(text);
  is >> gen_;
  if (!is) throw std::invalid_argument("bad rng state string");
}

}  // namespace ddprm
