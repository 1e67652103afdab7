#include "ddprm/chain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <sstream>

#include "ddprm/common.hpp"

namespace ddprm {

namespace {

constexpr double stick_eps = 1e-12;

// fast partial credit log probability for small m, avoiding allocation
double pcm_lp(double theta, const ThresholdVector& tau, int y) {
  const int m = static_cast<int>(tau.size());
  if (m > 32) return pcm_log_prob(theta, tau, y);
  std::array<double, 33> logs;
  logs[0] = 0.0;
  double cum = 0.0;
  double mx = 0.0;
  for (int k = 1; k <= m; ++k) {
    cum += tau[static_cast<std::size_t>(k - 1)];
    logs[static_cast<std::size_t>(k)] = k * theta - cum;
    mx = std::max(mx, logs[static_cast<std::size_t>(k)]);
  }
  double s = 0.0;
  for (int k = 0; k <= m; ++k) {
    s += std::exp(logs[static_cast<std::size_t>(k)] - mx);
  }
  return logs[static_cast<std::size_t>(y)] - mx - std::log(s);
}

int draw_pcm(double theta, const ThresholdVector& tau, RngStream& rng) {
  const int m = static_cast<int>(tau.size());
  std::array<double, 33> logs;
  logs[0] = 0.0;
  double cum = 0.0;
  for (int k = 1; k <= m; ++k) {
    cum += tau[static_cast<std::size_t>(k - 1)];
    logs[static_cast<std::size_t>(k)] = k * theta - cum;
  }
  return rng.categorical_from_log(
      std::span<const double>(logs.data(), static_cast<std::size_t>(m + 1)));
}

}  // namespace

void ChainConfig::validate() const {
  if (iterations < 1) throw config_error("iterations must be at least 1");
  if (burnin < 0 || burnin >= iterations) {
    throw config_error("burnin must satisfy 0 <= burnin < iterations");
  }
  if (thin < 1) throw config_error("thin must be at least 1");
  if (checkpoint_every > 0 && checkpoint_path.empty()) {
    throw config_error("checkpointing needs a checkpoint path");
  }
}

int slice_bound(double log_u) {
  if (!(log_u < 0.0)) return 0;
  int b = static_cast<int>(std::floor(-log_u));
  if (!(log_u < -static_cast<double>(b))) --b;
  return b;
}

int compute_n_max(const std::vector<double>& log_u) {
  int n = 0;
  for (double lu : log_u) n = std::max(n, slice_bound(lu));
  return n;
}

EscobarWestDraw escobar_west_update(double alpha_shape, double alpha_rate,
                                    int n, int n_components, double eta,
                                    double u) {
  EscobarWestDraw d;
  d.eta = eta;
  d.u = u;
  d.n_components = n_components;
  d.rate = alpha_rate - std::log(eta);
  d.odds = (alpha_shape + n_components - 1.0) /
           (d.rate * static_cast<double>(n));
  const double pi = d.odds / (1.0 + d.odds);
  d.shape = alpha_shape + n_components - (u > pi ? 1.0 : 0.0);
  return d;
}

SliceSampler::SliceSampler(RatingDataset data, HyperParams hyper,
                           EngineOptions opts, std::uint64_t seed,
                           int chain_id)
    : data_(std::move(data)),
      hyper_(std::move(hyper)),
      opts_(opts),
      rng_(RngStream::for_chain(seed, chain_id)) {
  data_.validate();
  hyper_.validate(data_.num_items);
  build_layout();
  init_state();
}

void SliceSampler::build_layout() {
  const int n_obs = static_cast<int>(data_.obs.size());
  slice_of_obs_.assign(static_cast<std::size_t>(n_obs), -1);
  pattern_of_obs_.assign(static_cast<std::size_t>(n_obs), -1);
  obs_of_examinee_.assign(static_cast<std::size_t>(data_.num_examinees), {});
  fixed_obs_of_item_.assign(static_cast<std::size_t>(data_.num_items), {});
  num_covariates_ = data_.design == CovariateDesign::explicit_columns
                        ? data_.num_covariates
                        : data_.num_items;

  common_m_ = 0;
  for (int i = 0; i < n_obs; ++i) {
    const Observation& o = data_.obs[static_cast<std::size_t>(i)];
    obs_of_examinee_[static_cast<std::size_t>(o.examinee)].push_back(i);
    if (hyper_.mode_of(o.item) == ItemMode::fixed) {
      fixed_obs_of_item_[static_cast<std::size_t>(o.item)].push_back(i);
      continue;
    }
    const int m = data_.max_category[static_cast<std::size_t>(o.item)];
    if (common_m_ == 0) {
      common_m_ = m;
    } else if (m != common_m_) {
      throw config_error(
          "mixture items must share a common number of categories");
    }
    const CovariateVector& x = data_.covariates(i);
    int q = -1;
    for (std::size_t p = 0; p < patterns_.size(); ++p) {
      if (patterns_[p] == x) {
        q = static_cast<int>(p);
        break;
      }
    }
    if (q < 0) {
      q = static_cast<int>(patterns_.size());
      patterns_.push_back(x);
      pattern_item_.push_back(
          data_.design == CovariateDesign::item_dummy ? o.item : -1);
    }
    slice_of_obs_[static_cast<std::size_t>(i)] =
        static_cast<int>(mixture_obs_.size());
    pattern_of_obs_[static_cast<std::size_t>(i)] = q;
    mixture_obs_.push_back(i);
    pattern_of_slice_.push_back(q);
  }
}

void SliceSampler::init_state() {
  const int p = num_covariates_;
  st_.theta.assign(static_cast<std::size_t>(data_.num_examinees), 0.0);
  st_.sigma2 = hyper_.sigma2_fixed() ? *hyper_.fixed_sigma2 : 1.0;
  st_.alpha = hyper_.alpha_fixed() ? *hyper_.fixed_alpha : 1.0;

  st_.sb.gamma.assign(static_cast<std::size_t>(p), 0.0);
  const UniformPrior& gb = hyper_.gamma_bounds;
  for (int j = 0; j < p; ++j) {
    st_.sb.gamma[static_cast<std::size_t>(j)] =
        gb.degenerate()
            ? gb.a
            : gb.a + (gb.b - gb.a) * (j + 0.5) / static_cast<double>(p);
  }
  const double psi0 = hyper_.psi_fixed()
                          ? hyper_.psi_fixed_value()
                          : 0.5 * (hyper_.psi_bounds.a + hyper_.psi_bounds.b);
  st_.sb.psi.assign(patterns_.size(), psi0);

  st_.fixed_item_tau.assign(static_cast<std::size_t>(data_.num_items), {});
  for (int j = 0; j < data_.num_items; ++j) {
    if (hyper_.mode_of(j) == ItemMode::fixed) {
      st_.fixed_item_tau[static_cast<std::size_t>(j)].assign(
          static_cast<std::size_t>(
              data_.max_category[static_cast<std::size_t>(j)]),
          0.0);
    }
  }

  sc_theta_.assign(st_.theta.size(), AdaptiveScale(opts_.init_step_theta));
  sc_gamma_.assign(static_cast<std::size_t>(p),
                   AdaptiveScale(opts_.init_step_gamma));
  sc_psi_.assign(patterns_.size(), AdaptiveScale(opts_.init_step_psi));
  sc_fixed_tau_.assign(static_cast<std::size_t>(data_.num_items), {});
  for (int j = 0; j < data_.num_items; ++j) {
    if (hyper_.mode_of(j) == ItemMode::fixed) {
      sc_fixed_tau_[static_cast<std::size_t>(j)].assign(
          static_cast<std::size_t>(
              data_.max_category[static_cast<std::size_t>(j)]),
          AdaptiveScale(opts_.init_step_tau));
    }
  }

  const std::size_t n_slice = mixture_obs_.size();
  st_.latents.z.assign(n_slice, 1);
  st_.latents.log_u.assign(n_slice, -1.0);
  if (n_slice > 0) {
    if (opts_.weights == EngineOptions::Weights::localized) {
      subsets_.assign(patterns_.size(), LocalSubset{});
      for (std::size_t q = 0; q < patterns_.size(); ++q) {
        const double v = linear_predictor(patterns_[q], st_.sb.gamma);
        subsets_[q] = local_subset(v, st_.sb.psi[q]);
      }
      // spread each pattern's observations across its whole subset; seeding
      // them all on one address starts the chain inside a deep basin the
      // stick conditionals escape only geometrically slowly
      std::vector<int> next_offset(patterns_.size(), 0);
      for (std::size_t k = 0; k < n_slice; ++k) {
        const std::size_t q = static_cast<std::size_t>(pattern_of_slice_[k]);
        const LocalSubset& s = subsets_[q];
        st_.latents.z[k] = s.first + next_offset[q];
        next_offset[q] = (next_offset[q] + 1) % s.size();
      }
      for (const LocalSubset& s : subsets_) {
        for (int h = s.first; h <= s.last; ++h) ensure_component(h);
      }
    } else {
      ensure_global_upto(1);
    }
    for (std::size_t k = 0; k < n_slice; ++k) {
      st_.latents.log_u[k] =
          -static_cast<double>(st_.latents.z[k]) + std::log(rng_.uniform());
    }
  }
  rebuild_caches();
}

void SliceSampler::ensure_component(int h) {
  if (st_.sb.components.contains(h)) return;
  Component c;
  const double b = st_.alpha + static_cast<double>(count_z_greater(h));
  c.upsilon = std::clamp(rng_.beta(1.0, b), stick_eps, 1.0 - stick_eps);
  c.tau = hyper_.tau_prior.sample(static_cast<std::size_t>(common_m_), rng_);
  st_.sb.components.emplace(h, std::move(c));
  sc_tau_.emplace(h, std::vector<AdaptiveScale>(
                         static_cast<std::size_t>(common_m_),
                         AdaptiveScale(opts_.init_step_tau)));
}

void SliceSampler::ensure_global_upto(int h) {
  for (int a = 1; a <= h; ++a) ensure_component(a);
}

int SliceSampler::count_z_greater(int h) const {
  // localized weights: an observation's weight product only walks its own
  // subset, so sticks below a pattern's window never appear in its factors
  if (opts_.weights == EngineOptions::Weights::localized) {
    int n = 0;
    for (std::size_t q = 0; q < alloc_.size(); ++q) {
      if (!subsets_[q].contains(h)) continue;
      for (auto it = alloc_[q].upper_bound(h); it != alloc_[q].end(); ++it) {
        n += it->second;
      }
    }
    return n;
  }
  const auto it =
      std::upper_bound(sorted_z_.begin(), sorted_z_.end(), h);
  return static_cast<int>(sorted_z_.end() - it);
}

double SliceSampler::pattern_location(int q) const {
  return linear_predictor(patterns_[static_cast<std::size_t>(q)],
                          st_.sb.gamma);
}

void SliceSampler::refresh_pattern_caches() {
  if (mixture_obs_.empty()) return;
  if (opts_.weights == EngineOptions::Weights::localized) {
    subsets_.assign(patterns_.size(), LocalSubset{});
    logw_.assign(patterns_.size(), {});
    for (std::size_t q = 0; q < patterns_.size(); ++q) {
      const double v = linear_predictor(patterns_[q], st_.sb.gamma);
      const LocalSubset s = local_subset(v, st_.sb.psi[q]);
      subsets_[q] = s;
      // log weights with the final stick forced to one, built from
      // log(1 - upsilon) partial sums so long subsets cannot underflow
      std::vector<double>& lw = logw_[q];
      lw.assign(static_cast<std::size_t>(s.size()), 0.0);
      double acc = 0.0;
      for (int l = 0; l < s.size(); ++l) {
        const Component& c = st_.sb.components.at(s.address(l));
        if (l + 1 == s.size()) {
          lw[static_cast<std::size_t>(l)] = acc;
        } else {
          lw[static_cast<std::size_t>(l)] = acc + std::log(c.upsilon);
          acc += std::log1p(-c.upsilon);
        }
      }
    }
  } else {
    const int top = st_.sb.components.empty()
                        ? 0
                        : st_.sb.components.rbegin()->first;
    global_logw_.assign(static_cast<std::size_t>(top), neg_inf);
    double acc = 0.0;
    for (int h = 1; h <= top; ++h) {
      const Component& c = st_.sb.components.at(h);
      global_logw_[static_cast<std::size_t>(h - 1)] =
          acc + std::log(c.upsilon);
      acc += std::log1p(-c.upsilon);
    }
  }
}

void SliceSampler::rebuild_allocation_index() {
  members_.clear();
  alloc_.assign(patterns_.size(), {});
  sorted_z_.assign(st_.latents.z.begin(), st_.latents.z.end());
  std::sort(sorted_z_.begin(), sorted_z_.end());
  for (std::size_t k = 0; k < st_.latents.z.size(); ++k) {
    const int h = st_.latents.z[k];
    members_[h].push_back(static_cast<int>(k));
    ++alloc_[static_cast<std::size_t>(pattern_of_slice_[k])][h];
  }
}

void SliceSampler::rebuild_caches() {
  refresh_pattern_caches();
  rebuild_allocation_index();
  for (const auto& [h, c] : st_.sb.components) {
    if (!sc_tau_.contains(h)) {
      sc_tau_.emplace(h, std::vector<AdaptiveScale>(
                             c.tau.size(), AdaptiveScale(opts_.init_step_tau)));
    }
  }
  if (mixture_obs_.empty()) return;
  if (opts_.weights == EngineOptions::Weights::localized) {
    for (std::size_t k = 0; k < st_.latents.z.size(); ++k) {
      const LocalSubset& s =
          subsets_[static_cast<std::size_t>(pattern_of_slice_[k])];
      if (!s.contains(st_.latents.z[k])) {
        throw chain_error("allocation outside its neighborhood: obs " +
                          std::to_string(mixture_obs_[k]) + " at address " +
                          std::to_string(st_.latents.z[k]));
      }
    }
  } else {
    for (std::int32_t z : st_.latents.z) {
      if (!st_.sb.components.contains(z)) {
        throw chain_error("allocation at unmaterialized address " +
                          std::to_string(z));
      }
    }
  }
}

void SliceSampler::sample_slice_u() {
  for (std::size_t k = 0; k < st_.latents.z.size(); ++k) {
    st_.latents.log_u[k] =
        -static_cast<double>(st_.latents.z[k]) + std::log(rng_.uniform());
  }
}

void SliceSampler::sample_allocation_z() {
  if (mixture_obs_.empty()) return;
  const bool global = opts_.weights == EngineOptions::Weights::global;
  if (global) {
    int need = 1;
    for (double lu : st_.latents.log_u) need = std::max(need, slice_bound(lu));
    ensure_global_upto(need);
    refresh_pattern_caches();
  }
  std::vector<double> lw;
  std::vector<int> cand;
  for (std::size_t k = 0; k < st_.latents.z.size(); ++k) {
    const int i = mixture_obs_[k];
    const Observation& o = data_.obs[static_cast<std::size_t>(i)];
    const double theta = st_.theta[static_cast<std::size_t>(o.examinee)];
    const int bound = slice_bound(st_.latents.log_u[k]);
    lw.clear();
    cand.clear();
    if (global) {
      for (int h = 1; h <= bound; ++h) {
        const Component& c = st_.sb.components.at(h);
        lw.push_back(static_cast<double>(h) +
                     global_logw_[static_cast<std::size_t>(h - 1)] +
                     pcm_lp(theta, c.tau, o.rating));
        cand.push_back(h);
      }
    } else {
      const int q = pattern_of_slice_[k];
      const LocalSubset& s = subsets_[static_cast<std::size_t>(q)];
      const std::vector<double>& wq = logw_[static_cast<std::size_t>(q)];
      const int top = std::min(s.last, bound);
      for (int h = s.first; h <= top; ++h) {
        const Component& c = st_.sb.components.at(h);
        lw.push_back(static_cast<double>(h) +
                     wq[static_cast<std::size_t>(s.position(h))] +
                     pcm_lp(theta, c.tau, o.rating));
        cand.push_back(h);
      }
    }
    if (cand.empty()) {
      throw chain_error("empty allocation support for obs " +
                        std::to_string(i));
    }
    st_.latents.z[k] =
        cand[static_cast<std::size_t>(rng_.categorical_from_log(lw))];
  }
  rebuild_allocation_index();
}

double SliceSampler::examinee_loglik(int t, double theta) const {
  double lp = 0.0;
  for (int i : obs_of_examinee_[static_cast<std::size_t>(t)]) {
    const Observation& o = data_.obs[static_cast<std::size_t>(i)];
    const int k = slice_of_obs_[static_cast<std::size_t>(i)];
    const ThresholdVector& tau =
        k >= 0 ? st_.sb.components.at(st_.latents.z[static_cast<std::size_t>(k)])
                     .tau
               : st_.fixed_item_tau[static_cast<std::size_t>(o.item)];
    lp += pcm_lp(theta, tau, o.rating);
  }
  return lp;
}

void SliceSampler::sample_theta() {
  for (int t = 0; t < data_.num_examinees; ++t) {
    AdaptiveScale& sc = sc_theta_[static_cast<std::size_t>(t)];
    const double cur = st_.theta[static_cast<std::size_t>(t)];
    const double lp_cur =
        examinee_loglik(t, cur) + log_normal_pdf(cur, 0.0, st_.sigma2);
    if (!std::isfinite(lp_cur)) {
      std::ostringstream os;
      os << "non-finite ability target: examinee " << t + 1 << " theta "
         << cur << " sigma2 " << st_.sigma2;
      throw chain_error(os.str());
    }
    const double prop = cur + sc.step() * rng_.normal(0.0, 1.0);
    const double lp_prop =
        examinee_loglik(t, prop) + log_normal_pdf(prop, 0.0, st_.sigma2);
    const bool accept = std::log(rng_.uniform()) < lp_prop - lp_cur;
    if (accept) st_.theta[static_cast<std::size_t>(t)] = prop;
    sc.record(accept, adapting_);
  }
}

std::pair<double, double> SliceSampler::sigma2_conditional() const {
  double ss = 0.0;
  for (double th : st_.theta) ss += th * th;
  return {hyper_.a_sigma2 + 0.5 * static_cast<double>(st_.theta.size()),
          hyper_.b_sigma2 + 0.5 * ss};
}

void SliceSampler::sample_sigma2() {
  if (hyper_.sigma2_fixed()) return;
  const auto [shape, rate] = sigma2_conditional();
  st_.sigma2 = rng_.inv_gamma(shape, rate);
}

double SliceSampler::allocation_score_localized(
    const std::vector<LocalSubset>& subsets,
    const std::vector<std::vector<double>>& logw) const {
  double score = 0.0;
  for (std::size_t q = 0; q < alloc_.size(); ++q) {
    const LocalSubset& s = subsets[q];
    for (const auto& [h, count] : alloc_[q]) {
      if (!s.contains(h)) return neg_inf;
      score += static_cast<double>(count) *
               logw[q][static_cast<std::size_t>(s.position(h))];
    }
  }
  return score;
}

bool SliceSampler::allocations_inside(
    const std::vector<LocalSubset>& subsets) const {
  for (std::size_t q = 0; q < alloc_.size(); ++q) {
    for (const auto& [h, count] : alloc_[q]) {
      (void)count;
      if (!subsets[q].contains(h)) return false;
    }
  }
  return true;
}

double SliceSampler::stick_prefix_score() const {
  // allocation mass under the raw stick products, shared by every pattern
  double score = 0.0;
  for (const auto& [h, ks] : members_) {
    double lw = 0.0;
    for (int r = 1; r < h; ++r) {
      lw += std::log1p(-st_.sb.components.at(r).upsilon);
    }
    lw += std::log(st_.sb.components.at(h).upsilon);
    score += static_cast<double>(ks.size()) * lw;
  }
  return score;
}

void SliceSampler::sample_gamma() {
  if (mixture_obs_.empty()) return;
  if (opts_.weights == EngineOptions::Weights::global) return;
  if (hyper_.gamma_bounds.degenerate()) return;
  const bool local_target =
      opts_.coef_target == EngineOptions::CoefficientTarget::local_weights;
  for (std::size_t j = 0; j < st_.sb.gamma.size(); ++j) {
    AdaptiveScale& sc = sc_gamma_[j];
    const double cur = st_.sb.gamma[j];
    const double prop = cur + sc.step() * rng_.normal(0.0, 1.0);
    if (prop < hyper_.gamma_bounds.a || prop > hyper_.gamma_bounds.b) {
      sc.record(false, adapting_);
      continue;
    }
    std::vector<double> gam = st_.sb.gamma;
    gam[j] = prop;
    std::vector<LocalSubset> subs(patterns_.size());
    bool ok = true;
    for (std::size_t q = 0; q < patterns_.size() && ok; ++q) {
      const double v = linear_predictor(patterns_[q], gam);
      const double psi = st_.sb.psi[q];
      LocalSubset s;
      s.first = std::max(1, static_cast<int>(std::ceil(v - psi)));
      s.last = static_cast<int>(std::floor(v + psi));
      if (s.empty()) ok = false;
      subs[q] = s;
    }
    if (!ok || !allocations_inside(subs)) {
      sc.record(false, adapting_);
      continue;
    }
    for (const LocalSubset& s : subs) {
      for (int h = s.first; h <= s.last; ++h) ensure_component(h);
    }
    bool accept = true;
    if (local_target) {
      std::vector<std::vector<double>> lw2(patterns_.size());
      for (std::size_t q = 0; q < patterns_.size(); ++q) {
        const LocalSubset& s = subs[q];
        lw2[q].assign(static_cast<std::size_t>(s.size()), 0.0);
        double acc = 0.0;
        for (int l = 0; l < s.size(); ++l) {
          const Component& c = st_.sb.components.at(s.address(l));
          if (l + 1 == s.size()) {
            lw2[q][static_cast<std::size_t>(l)] = acc;
          } else {
            lw2[q][static_cast<std::size_t>(l)] = acc + std::log(c.upsilon);
            acc += std::log1p(-c.upsilon);
          }
        }
      }
      const double s_cur = allocation_score_localized(subsets_, logw_);
      if (!std::isfinite(s_cur)) {
        throw chain_error("non-finite allocation score at current gamma");
      }
      const double s_prop = allocation_score_localized(subs, lw2);
      accept = std::log(rng_.uniform()) < s_prop - s_cur;
      if (accept) {
        st_.sb.gamma[j] = prop;
        subsets_ = std::move(subs);
        logw_ = std::move(lw2);
      }
    } else {
      // stick prefix products do not involve gamma, so once membership
      // holds the uniform prior makes the move a coin flip against itself
      st_.sb.gamma[j] = prop;
      subsets_ = std::move(subs);
      refresh_pattern_caches();
    }
    sc.record(accept, adapting_);
  }
}

void SliceSampler::sample_psi() {
  if (mixture_obs_.empty()) return;
  if (opts_.weights == EngineOptions::Weights::global) return;
  if (hyper_.psi_fixed() || hyper_.psi_bounds.degenerate()) return;
  const bool local_target =
      opts_.coef_target == EngineOptions::CoefficientTarget::local_weights;
  for (std::size_t q = 0; q < patterns_.size(); ++q) {
    AdaptiveScale& sc = sc_psi_[q];
    const double cur = st_.sb.psi[q];
    const double prop = cur + sc.step() * rng_.normal(0.0, 1.0);
    if (prop < hyper_.psi_bounds.a || prop > hyper_.psi_bounds.b) {
      sc.record(false, adapting_);
      continue;
    }
    const double v = linear_predictor(patterns_[q], st_.sb.gamma);
    LocalSubset s;
    s.first = std::max(1, static_cast<int>(std::ceil(v - prop)));
    s.last = static_cast<int>(std::floor(v + prop));
    bool ok = !s.empty();
    if (ok) {
      for (const auto& [h, count] : alloc_[q]) {
        (void)count;
        if (!s.contains(h)) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) {
      sc.record(false, adapting_);
      continue;
    }
    for (int h = s.first; h <= s.last; ++h) ensure_component(h);
    bool accept = true;
    if (local_target) {
      std::vector<double> lw2(static_cast<std::size_t>(s.size()), 0.0);
      double acc = 0.0;
      for (int l = 0; l < s.size(); ++l) {
        const Component& c = st_.sb.components.at(s.address(l));
        if (l + 1 == s.size()) {
          lw2[static_cast<std::size_t>(l)] = acc;
        } else {
          lw2[static_cast<std::size_t>(l)] = acc + std::log(c.upsilon);
          acc += std::log1p(-c.upsilon);
        }
      }
      double s_cur = 0.0;
      double s_prop = 0.0;
      const LocalSubset& s0 = subsets_[q];
      for (const auto& [h, count] : alloc_[q]) {
        s_cur += static_cast<double>(count) *
                 logw_[q][static_cast<std::size_t>(s0.position(h))];
        s_prop += static_cast<double>(count) *
                  lw2[static_cast<std::size_t>(s.position(h))];
      }
      if (!std::isfinite(s_cur)) {
        throw chain_error("non-finite allocation score at current psi");
      }
      accept = std::log(rng_.uniform()) < s_prop - s_cur;
      if (accept) {
        st_.sb.psi[q] = prop;
        subsets_[q] = s;
        logw_[q] = std::move(lw2);
      }
    } else {
      st_.sb.psi[q] = prop;
      subsets_[q] = s;
      refresh_pattern_caches();
    }
    sc.record(accept, adapting_);
  }
}

void SliceSampler::sample_tau() {
  for (auto& [h, comp] : st_.sb.components) {
    const auto mit = members_.find(h);
    if (mit == members_.end() || mit->second.empty()) {
      comp.tau =
          hyper_.tau_prior.sample(static_cast<std::size_t>(common_m_), rng_);
      continue;
    }
    const std::vector<int>& ks = mit->second;
    std::vector<AdaptiveScale>& scs = sc_tau_.at(h);
    for (std::size_t l = 0; l < comp.tau.size(); ++l) {
      ThresholdVector prop = comp.tau;
      prop[l] += scs[l].step() * rng_.normal(0.0, 1.0);
      double delta = hyper_.tau_prior.log_density(prop) -
                     hyper_.tau_prior.log_density(comp.tau);
      for (int k : ks) {
        const Observation& o =
            data_.obs[static_cast<std::size_t>(
                mixture_obs_[static_cast<std::size_t>(k)])];
        const double theta = st_.theta[static_cast<std::size_t>(o.examinee)];
        delta += pcm_lp(theta, prop, o.rating) -
                 pcm_lp(theta, comp.tau, o.rating);
      }
      const bool accept = std::log(rng_.uniform()) < delta;
      if (accept) comp.tau = std::move(prop);
      scs[l].record(accept, adapting_);
    }
  }
  for (int j = 0; j < data_.num_items; ++j) {
    if (hyper_.mode_of(j) != ItemMode::fixed) continue;
    ThresholdVector& tau = st_.fixed_item_tau[static_cast<std::size_t>(j)];
    std::vector<AdaptiveScale>& scs = sc_fixed_tau_[static_cast<std::size_t>(j)];
    for (std::size_t l = 0; l < tau.size(); ++l) {
      ThresholdVector prop = tau;
      prop[l] += scs[l].step() * rng_.normal(0.0, 1.0);
      double delta = hyper_.tau_fixed_prior.log_density(prop) -
                     hyper_.tau_fixed_prior.log_density(tau);
      for (int i : fixed_obs_of_item_[static_cast<std::size_t>(j)]) {
        const Observation& o = data_.obs[static_cast<std::size_t>(i)];
        const double theta = st_.theta[static_cast<std::size_t>(o.examinee)];
        delta += pcm_lp(theta, prop, o.rating) -
                 pcm_lp(theta, tau, o.rating);
      }
      const bool accept = std::log(rng_.uniform()) < delta;
      if (accept) tau = std::move(prop);
      scs[l].record(accept, adapting_);
    }
  }
}

std::pair<double, double> SliceSampler::upsilon_conditional(int h) const {
  double a = 1.0;
  if (opts_.weights == EngineOptions::Weights::localized) {
    for (std::size_t q = 0; q < alloc_.size(); ++q) {
      const auto it = alloc_[q].find(h);
      if (it != alloc_[q].end() && h != subsets_[q].last) {
        a += static_cast<double>(it->second);
      }
    }
  } else {
    const auto it = members_.find(h);
    if (it != members_.end()) a += static_cast<double>(it->second.size());
  }
  const double b = st_.alpha + static_cast<double>(count_z_greater(h));
  return {a, b};
}

void SliceSampler::sample_upsilon() {
  for (auto& [h, comp] : st_.sb.components) {
    const auto [a, b] = upsilon_conditional(h);
    comp.upsilon = std::clamp(rng_.beta(a, b), stick_eps, 1.0 - stick_eps);
  }
  refresh_pattern_caches();
}

std::optional<EscobarWestDraw> SliceSampler::sample_alpha() {
  if (hyper_.alpha_fixed() || mixture_obs_.empty()) return std::nullopt;
  const int n = static_cast<int>(mixture_obs_.size());
  int k = 0;
  for (const auto& [h, ks] : members_) {
    if (!ks.empty()) ++k;
  }
  const double eta = rng_.beta(st_.alpha + 1.0, static_cast<double>(n));
  const double u = rng_.uniform();
  EscobarWestDraw d =
      escobar_west_update(hyper_.a_alpha, hyper_.b_alpha, n, k, eta, u);
  d.alpha = rng_.gamma_rate(d.shape, d.rate);
  st_.alpha = d.alpha;
  return d;
}

void SliceSampler::prune_components() {
  if (opts_.weights == EngineOptions::Weights::localized) {
    for (auto it = st_.sb.components.begin();
         it != st_.sb.components.end();) {
      const int h = it->first;
      bool needed = members_.contains(h);
      for (std::size_t q = 0; q < subsets_.size() && !needed; ++q) {
        needed = subsets_[q].contains(h);
      }
      if (needed) {
        ++it;
      } else {
        sc_tau_.erase(h);
        it = st_.sb.components.erase(it);
      }
    }
  } else {
    const int top = sorted_z_.empty() ? 1 : sorted_z_.back();
    for (auto it = st_.sb.components.upper_bound(top);
         it != st_.sb.components.end();) {
      sc_tau_.erase(it->first);
      it = st_.sb.components.erase(it);
    }
    refresh_pattern_caches();
  }
}

void SliceSampler::iterate() {
  sample_slice_u();
  sample_allocation_z();
  sample_theta();
  sample_sigma2();
  sample_gamma();
  sample_psi();
  sample_tau();
  sample_upsilon();
  sample_alpha();
  prune_components();
}

double SliceSampler::joint_augmented_loglik() const {
  double lp = 0.0;
  const bool global = opts_.weights == EngineOptions::Weights::global;
  for (std::size_t k = 0; k < st_.latents.z.size(); ++k) {
    const int z = st_.latents.z[k];
    if (!(st_.latents.log_u[k] < -static_cast<double>(z))) return neg_inf;
    const Observation& o =
        data_.obs[static_cast<std::size_t>(mixture_obs_[k])];
    const double theta = st_.theta[static_cast<std::size_t>(o.examinee)];
    lp += static_cast<double>(z) +
          pcm_lp(theta, st_.sb.components.at(z).tau, o.rating);
    if (global) {
      lp += global_logw_[static_cast<std::size_t>(z - 1)];
    } else {
      const int q = pattern_of_slice_[k];
      const LocalSubset& s = subsets_[static_cast<std::size_t>(q)];
      if (!s.contains(z)) return neg_inf;
      lp += logw_[static_cast<std::size_t>(q)]
                 [static_cast<std::size_t>(s.position(z))];
    }
  }
  return lp;
}

double SliceSampler::complete_loglik() const {
  double lp = 0.0;
  for (std::size_t i = 0; i < data_.obs.size(); ++i) {
    const Observation& o = data_.obs[i];
    const double theta = st_.theta[static_cast<std::size_t>(o.examinee)];
    const int k = slice_of_obs_[i];
    const ThresholdVector& tau =
        k >= 0 ? st_.sb.components.at(st_.latents.z[static_cast<std::size_t>(k)])
                     .tau
               : st_.fixed_item_tau[static_cast<std::size_t>(o.item)];
    lp += pcm_lp(theta, tau, o.rating);
  }
  return lp;
}

int SliceSampler::n_max() const { return compute_n_max(st_.latents.log_u); }

AdaptiveScale& SliceSampler::tau_scale(int h, int coord) {
  return sc_tau_.at(h)[static_cast<std::size_t>(coord)];
}

AdaptiveScale& SliceSampler::fixed_tau_scale(int item, int coord) {
  return sc_fixed_tau_[static_cast<std::size_t>(item)]
                      [static_cast<std::size_t>(coord)];
}

std::map<std::string, double> SliceSampler::acceptance_rates() const {
  std::map<std::string, double> out;
  const auto mean_rate = [](const std::vector<AdaptiveScale>& v) {
    double s = 0.0;
    std::int64_t n = 0;
    for (const AdaptiveScale& a : v) {
      if (a.proposals() > 0) {
        s += a.acceptance_rate();
        ++n;
      }
    }
    return n > 0 ? s / static_cast<double>(n) : 0.0;
  };
  out["theta"] = mean_rate(sc_theta_);
  if (!sc_gamma_.empty()) out["gamma"] = mean_rate(sc_gamma_);
  if (!sc_psi_.empty()) out["psi"] = mean_rate(sc_psi_);
  double s = 0.0;
  std::int64_t n = 0;
  for (const auto& [h, v] : sc_tau_) {
    for (const AdaptiveScale& a : v) {
      if (a.proposals() > 0) {
        s += a.acceptance_rate();
        ++n;
      }
    }
  }
  if (n > 0) out["tau"] = s / static_cast<double>(n);
  s = 0.0;
  n = 0;
  for (const auto& v : sc_fixed_tau_) {
    for (const AdaptiveScale& a : v) {
      if (a.proposals() > 0) {
        s += a.acceptance_rate();
        ++n;
      }
    }
  }
  if (n > 0) out["tau_fixed"] = s / static_cast<double>(n);
  return out;
}

ArchiveState SliceSampler::snapshot() {
  ArchiveState s;
  s.theta = st_.theta;
  s.sigma2 = st_.sigma2;
  s.alpha = st_.alpha;
  s.gamma = st_.sb.gamma;
  s.psi = st_.sb.psi;
  s.components.reserve(st_.sb.components.size());
  for (const auto& [h, c] : st_.sb.components) {
    s.components.push_back({h, c.upsilon, c.tau});
  }
  s.fixed_item_tau = st_.fixed_item_tau;
  s.z = st_.latents.z;
  s.ypred.resize(data_.obs.size());
  for (std::size_t i = 0; i < data_.obs.size(); ++i) {
    const Observation& o = data_.obs[i];
    const double theta = st_.theta[static_cast<std::size_t>(o.examinee)];
    const int k = slice_of_obs_[i];
    const ThresholdVector& tau =
        k >= 0 ? st_.sb.components.at(st_.latents.z[static_cast<std::size_t>(k)])
                     .tau
               : st_.fixed_item_tau[static_cast<std::size_t>(o.item)];
    s.ypred[i] = static_cast<std::int16_t>(draw_pcm(theta, tau, rng_));
  }
  s.loglik = complete_loglik();
  return s;
}

PosteriorArchive SliceSampler::make_shell(const ChainConfig& cfg) const {
  RunInfo info;
  info.seed = cfg.seed;
  info.chain_id = cfg.chain_id;
  info.iterations = cfg.iterations;
  info.burnin = cfg.burnin;
  info.thin = cfg.thin;
  info.weights_mode =
      opts_.weights == EngineOptions::Weights::global ? 1 : 0;
  return PosteriorArchive(data_, mixture_obs_, pattern_of_obs_, patterns_,
                          pattern_item_, info);
}

PosteriorArchive SliceSampler::run(const ChainConfig& cfg) {
  cfg.validate();
  PosteriorArchive archive = make_shell(cfg);
  for (std::int64_t s = 1; s <= cfg.iterations; ++s) {
    adapting_ = s <= cfg.burnin;
    iterate();
    if (s > cfg.burnin && (s - cfg.burnin) % cfg.thin == 0) {
      archive.add_state(snapshot());
    }
    if (cfg.progress_every > 0 && cfg.progress_stream != nullptr &&
        (s % cfg.progress_every == 0 || s == cfg.iterations)) {
      *cfg.progress_stream << "iter " << s << "/" << cfg.iterations
                           << " loglik " << complete_loglik() << " components "
                           << st_.sb.components.size() << " alpha "
                           << st_.alpha << "\n";
    }
    if (cfg.checkpoint_every > 0 && s % cfg.checkpoint_every == 0) {
      archive.info().acceptance = acceptance_rates();
      archive.save(cfg.checkpoint_path);
    }
  }
  archive.info().acceptance = acceptance_rates();
  return archive;
}

PosteriorArchive run_chain(const RatingDataset& data, const HyperParams& hyper,
                           const ChainConfig& cfg, EngineOptions opts) {
  SliceSampler s(data, hyper, opts, cfg.seed, cfg.chain_id);
  return s.run(cfg);
}

}  // namespace ddprm
