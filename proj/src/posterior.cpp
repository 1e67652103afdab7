#include "ddprm/posterior.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "ddprm/common.hpp"
#include "ddprm/model_core.hpp"

namespace ddprm {

namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014327;

// localized or global mixing weights of one saved state at one pattern
struct StateWeights {
  LocalSubset subset;
  std::vector<double> weights;
};

StateWeights state_pattern_weights(const PosteriorArchive& a, std::size_t s,
                                   int q) {
  const ArchiveState& st = a.state(s);
  StateWeights out;
  if (a.info().weights_mode == 1) {
    // one global stick sequence; truncate at the materialized components
    // and renormalize the leftover tail mass away
    const int top = st.components.empty() ? 0 : st.components.back().h;
    out.subset = LocalSubset{1, top};
    out.weights.assign(static_cast<std::size_t>(top), 0.0);
    double acc = 0.0;
    double total = 0.0;
    for (const ArchiveComponent& c : st.components) {
      const double w = std::exp(acc) * c.upsilon;
      out.weights[static_cast<std::size_t>(c.h - 1)] = w;
      acc += std::log1p(-c.upsilon);
      total += w;
    }
    if (total > 0.0) {
      for (double& w : out.weights) w /= total;
    }
    return out;
  }
  const double v = linear_predictor(a.pattern(q), st.gamma);
  out.subset = local_subset(v, st.psi[static_cast<std::size_t>(q)]);
  out.weights.assign(static_cast<std::size_t>(out.subset.size()), 0.0);
  double acc = 0.0;
  for (int l = 0; l < out.subset.size(); ++l) {
    const int h = out.subset.address(l);
    // components are sorted by address
    const auto it = std::lower_bound(
        st.components.begin(), st.components.end(), h,
        [](const ArchiveComponent& c, int hh) { return c.h < hh; });
    if (it == st.components.end() || it->h != h) {
      throw std::out_of_range("archive state lacks component " +
                              std::to_string(h));
    }
    const double ups = it->upsilon;
    if (l + 1 == out.subset.size()) {
      out.weights[static_cast<std::size_t>(l)] = std::exp(acc);
    } else {
      out.weights[static_cast<std::size_t>(l)] = std::exp(acc) * ups;
      acc += std::log1p(-ups);
    }
  }
  return out;
}

int obs_examinee(const PosteriorArchive& a, int obs_index) {
  return a.data().obs[static_cast<std::size_t>(obs_index)].examinee;
}

struct Selector {
  std::string name;
  int i = -1;
  int j = -1;
};

Selector parse_selector(const std::string& s) {
  Selector sel;
  const auto b1 = s.find('[');
  if (b1 == std::string::npos) {
    sel.name = s;
    return sel;
  }
  sel.name = s.substr(0, b1);
  std::size_t pos = b1;
  int* slots[2] = {&sel.i, &sel.j};
  for (int slot = 0; slot < 2 && pos != std::string::npos; ++slot) {
    if (s[pos] != '[') break;
    const auto close = s.find(']', pos);
    if (close == std::string::npos) {
      throw std::invalid_argument("unbalanced selector: " + s);
    }
    try {
      *slots[slot] = std::stoi(s.substr(pos + 1, close - pos - 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad selector index: " + s);
    }
    pos = close + 1;
    if (pos >= s.size()) pos = std::string::npos;
  }
  if (pos != std::string::npos) {
    throw std::invalid_argument("trailing selector text: " + s);
  }
  return sel;
}

}  // namespace

std::pair<double, double> predictive_mean_var(const PosteriorArchive& a,
                                              int obs_index) {
  const std::size_t S = a.size();
  if (S == 0) throw std::invalid_argument("archive has no saved states");
  const int t = obs_examinee(a, obs_index);
  double sum_mu = 0.0;
  double sum_mu2 = 0.0;
  double sum_v = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const ThresholdVector& tau = a.thresholds_for(s, obs_index);
    const double theta = a.state(s).theta[static_cast<std::size_t>(t)];
    const auto [mu, v] = pcm_mean_var(theta, tau);
    sum_mu += mu;
    sum_mu2 += mu * mu;
    sum_v += v;
  }
  const double n = static_cast<double>(S);
  const double e = sum_mu / n;
  const double spread = std::max(0.0, sum_mu2 / n - e * e);
  return {e, sum_v / n + spread};
}

std::vector<double> predictive_pmf(const PosteriorArchive& a, int pattern,
                                   std::optional<double> theta,
                                   RngStream* rng) {
  const std::size_t S = a.size();
  if (S == 0) throw std::invalid_argument("archive has no saved states");
  if (pattern < 0 || pattern >= a.num_patterns()) {
    throw std::out_of_range("pattern index");
  }
  if (!theta && rng == nullptr) {
    throw std::invalid_argument(
        "integrating over ability needs a random stream");
  }
  std::vector<double> pmf;
  for (std::size_t s = 0; s < S; ++s) {
    const ArchiveState& st = a.state(s);
    const StateWeights sw = state_pattern_weights(a, s, pattern);
    const double th =
        theta ? *theta : rng->normal(0.0, std::sqrt(st.sigma2));
    for (int l = 0; l < sw.subset.size(); ++l) {
      const double w = sw.weights[static_cast<std::size_t>(l)];
      if (w == 0.0) continue;
      const ThresholdVector& tau = st.atom(sw.subset.address(l));
      const std::vector<double> p = pcm_distribution(th, tau);
      if (pmf.empty()) pmf.assign(p.size(), 0.0);
      if (p.size() != pmf.size()) {
        throw std::invalid_argument("atoms disagree on category count");
      }
      for (std::size_t k = 0; k < p.size(); ++k) pmf[k] += w * p[k];
    }
  }
  for (double& p : pmf) p /= static_cast<double>(S);
  return pmf;
}

DensityEstimate weighted_kde(std::span<const double> values,
                             std::span<const double> weights,
                             double mode_floor) {
  if (values.empty() || values.size() != weights.size()) {
    throw std::invalid_argument("kde needs matching nonempty samples");
  }
  double wtot = 0.0;
  double lo = values[0];
  double hi = values[0];
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(weights[i] >= 0.0)) {
      throw std::invalid_argument("negative kde weight");
    }
    wtot += weights[i];
    mean += weights[i] * values[i];
    lo = std::min(lo, values[i]);
    hi = std::max(hi, values[i]);
  }
  if (!(wtot > 0.0)) throw std::invalid_argument("zero total kde weight");
  mean /= wtot;
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    var += weights[i] * d * d;
  }
  var /= wtot;
  const double sd = std::sqrt(std::max(0.0, var));

  // weighted quartiles for the robust spread term
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return values[x] < values[y];
  });
  double q25 = values[order.front()];
  double q75 = values[order.back()];
  double cum = 0.0;
  bool got25 = false;
  for (std::size_t idx : order) {
    cum += weights[idx];
    if (!got25 && cum >= 0.25 * wtot) {
      q25 = values[idx];
      got25 = true;
    }
    if (cum >= 0.75 * wtot) {
      q75 = values[idx];
      break;
    }
  }
  const double iqr = q75 - q25;

  double spread = 0.0;
  if (sd > 0.0 && iqr > 0.0) {
    spread = std::min(sd, iqr / 1.34);
  } else if (sd > 0.0) {
    spread = sd;
  } else if (iqr > 0.0) {
    spread = iqr / 1.34;
  }
  // Kish effective sample size: repeated/unequal weights carry less
  // information than their raw total suggests
  double w2 = 0.0;
  for (double w : weights) w2 += w * w;
  const double n_eff = wtot * wtot / w2;
  double bw = 0.9 * spread * std::pow(n_eff, -0.2);
  if (!(bw > 0.0)) {
    // degenerate sample: a narrow spike centered on the single value
    bw = std::max(1e-3, 1e-3 * std::abs(values[0]));
  }

  DensityEstimate d;
  d.bandwidth = bw;
  constexpr int n_grid = 512;
  const double g0 = lo - 3.0 * bw;
  const double g1 = hi + 3.0 * bw;
  const double step = (g1 - g0) / static_cast<double>(n_grid - 1);
  d.grid.resize(n_grid);
  d.density.assign(n_grid, 0.0);
  for (int g = 0; g < n_grid; ++g) d.grid[static_cast<std::size_t>(g)] = g0 + step * g;
  // kernels contribute within 8 bandwidths; outside that they are below
  // double noise for these magnitudes
  const double cut = 8.0 * bw;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const int ga = std::max(
        0, static_cast<int>(std::ceil((values[i] - cut - g0) / step)));
    const int gb = std::min(
        n_grid - 1,
        static_cast<int>(std::floor((values[i] + cut - g0) / step)));
    for (int g = ga; g <= gb; ++g) {
      const double zscore = (d.grid[static_cast<std::size_t>(g)] - values[i]) / bw;
      d.density[static_cast<std::size_t>(g)] +=
          weights[i] * std::exp(-0.5 * zscore * zscore);
    }
  }
  const double norm = inv_sqrt_2pi / (wtot * bw);
  for (double& v : d.density) v *= norm;
  // the +-3 bandwidth window clips a sliver of edge-kernel mass; rescale so
  // the trapezoid integral is exactly one
  double integral = 0.0;
  for (int g = 0; g + 1 < n_grid; ++g) {
    integral += 0.5 * step *
                (d.density[static_cast<std::size_t>(g)] +
                 d.density[static_cast<std::size_t>(g + 1)]);
  }
  if (integral > 0.0) {
    for (double& v : d.density) v /= integral;
  }
  find_modes(d, mode_floor);
  return d;
}

void find_modes(DensityEstimate& d, double floor_frac) {
  d.mode_locations.clear();
  d.mode_heights.clear();
  const std::size_t n = d.density.size();
  if (n < 3) return;
  double peak = 0.0;
  for (double v : d.density) peak = std::max(peak, v);
  const double floor = floor_frac * peak;
  std::vector<std::pair<double, double>> modes;  // height, location
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(d.density[i] > d.density[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < n && d.density[j + 1] == d.density[i]) ++j;
    if (j + 1 >= n || !(d.density[j + 1] < d.density[i])) continue;
    if (d.density[i] < floor) continue;
    const std::size_t mid = (i + j) / 2;
    modes.emplace_back(d.density[i], d.grid[mid]);
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (const auto& [h, loc] : modes) {
    d.mode_locations.push_back(loc);
    d.mode_heights.push_back(h);
  }
}

DensityEstimate mixing_density(const PosteriorArchive& a, int pattern,
                               int coord, double mode_floor) {
  if (pattern < 0 || pattern >= a.num_patterns()) {
    throw std::out_of_range("pattern index");
  }
  if (a.size() == 0) throw std::invalid_argument("archive has no saved states");
  std::vector<int> slice_positions;
  for (std::size_t k = 0; k < a.mixture_obs().size(); ++k) {
    if (a.pattern_of_obs(a.mixture_obs()[k]) == pattern) {
      slice_positions.push_back(static_cast<int>(k));
    }
  }
  if (slice_positions.empty()) {
    throw std::invalid_argument("pattern has no mixture observations");
  }
  std::vector<double> values;
  std::vector<double> weights;
  std::map<int, int> counts;
  for (std::size_t s = 0; s < a.size(); ++s) {
    const ArchiveState& st = a.state(s);
    counts.clear();
    for (int k : slice_positions) {
      ++counts[st.z[static_cast<std::size_t>(k)]];
    }
    for (const auto& [h, c] : counts) {
      const ThresholdVector& tau = st.atom(h);
      if (coord < 0 || coord >= static_cast<int>(tau.size())) {
        throw std::out_of_range("threshold coordinate");
      }
      values.push_back(tau[static_cast<std::size_t>(coord)]);
      weights.push_back(static_cast<double>(c));
    }
  }
  return weighted_kde(values, weights, mode_floor);
}

SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  s.n = values.size();
  if (s.n == 0) throw std::invalid_argument("empty trace");
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    ss += d * d;
  }
  s.sd = std::sqrt(ss / static_cast<double>(s.n));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(s.n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= s.n) return sorted[s.n - 1];
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
  };
  s.median = quantile(0.5);
  s.q025 = quantile(0.025);
  s.q975 = quantile(0.975);
  return s;
}

std::vector<double> extract_trace(const PosteriorArchive& a,
                                  const std::string& selector) {
  if (a.size() == 0) throw std::invalid_argument("archive has no saved states");
  const Selector sel = parse_selector(selector);
  std::vector<double> out;
  out.reserve(a.size());
  const auto need_index = [&](int idx, int limit, const char* what) {
    if (idx < 1 || idx > limit) {
      throw std::invalid_argument("selector index out of range for " +
                                  std::string(what) + ": " + selector);
    }
  };
  for (std::size_t s = 0; s < a.size(); ++s) {
    const ArchiveState& st = a.state(s);
    if (sel.name == "sigma2") {
      out.push_back(st.sigma2);
    } else if (sel.name == "alpha") {
      out.push_back(st.alpha);
    } else if (sel.name == "loglik") {
      out.push_back(st.loglik);
    } else if (sel.name == "theta") {
      need_index(sel.i, static_cast<int>(st.theta.size()), "theta");
      out.push_back(st.theta[static_cast<std::size_t>(sel.i - 1)]);
    } else if (sel.name == "gamma") {
      need_index(sel.i, static_cast<int>(st.gamma.size()), "gamma");
      out.push_back(st.gamma[static_cast<std::size_t>(sel.i - 1)]);
    } else if (sel.name == "psi") {
      need_index(sel.i, static_cast<int>(st.psi.size()), "psi");
      out.push_back(st.psi[static_cast<std::size_t>(sel.i - 1)]);
    } else if (sel.name == "tau_fixed") {
      need_index(sel.i, static_cast<int>(st.fixed_item_tau.size()),
                 "tau_fixed item");
      const ThresholdVector& tau =
          st.fixed_item_tau[static_cast<std::size_t>(sel.i - 1)];
      if (tau.empty()) {
        throw std::invalid_argument("item " + std::to_string(sel.i) +
                                    " is not a fixed-threshold item");
      }
      need_index(sel.j, static_cast<int>(tau.size()), "tau_fixed coordinate");
      out.push_back(tau[static_cast<std::size_t>(sel.j - 1)]);
    } else {
      throw std::invalid_argument("unknown selector: " + selector);
    }
  }
  return out;
}

double batch_means_halfwidth(std::span<const double> trace,
                             double confidence) {
  const std::size_t S = trace.size();
  const std::size_t b = static_cast<std::size_t>(std::floor(std::sqrt(
      static_cast<double>(S))));
  if (b < 2 || S / b < 2) {
    throw std::invalid_argument("trace too short for batch means");
  }
  if (!(confidence > 0.0) || !(confidence < 1.0)) {
    throw std::invalid_argument("confidence must lie in (0, 1)");
  }
  const std::size_t nb = S / b;  // number of batches of size b
  std::vector<double> means(nb, 0.0);
  for (std::size_t i = 0; i < nb; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < b; ++k) s += trace[i * b + k];
    means[i] = s / static_cast<double>(b);
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= static_cast<double>(nb);
  double ss = 0.0;
  for (double m : means) {
    const double d = m - grand;
    ss += d * d;
  }
  const double var_mean = ss / static_cast<double>(nb - 1) /
                          static_cast<double>(nb);
  boost::math::students_t dist(static_cast<double>(nb - 1));
  const double t = boost::math::quantile(dist, 0.5 + 0.5 * confidence);
  return t * std::sqrt(var_mean);
}

void export_traces(const PosteriorArchive& a,
                   const std::vector<std::string>& selectors,
                   const std::string& path) {
  if (selectors.empty()) {
    throw std::invalid_argument("no trace selectors given");
  }
  std::vector<std::vector<double>> cols;
  cols.reserve(selectors.size());
  for (const std::string& sel : selectors) {
    cols.push_back(extract_trace(a, sel));
  }
  std::ofstream out(path);
  if (!out) throw config_error("cannot write trace file: " + path);
  for (std::size_t c = 0; c < selectors.size(); ++c) {
    out << (c ? "," : "") << selectors[c];
  }
  out << "\n";
  char buf[32];
  for (std::size_t s = 0; s < a.size(); ++s) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", cols[c][s]);
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace ddprm
