#include "ddprm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "ddprm/common.hpp"
#include "ddprm/model_core.hpp"
#include "ddprm/posterior.hpp"
#include "ddprm/rng.hpp"

namespace ddprm {

void SimConfig::validate() const {
  if (num_examinees < 1 || num_items < 1 || max_category < 1) {
    throw config_error("simulation dimensions must be positive");
  }
  if (!(ability_variance > 0.0)) {
    throw config_error("ability variance must be positive");
  }
  if (cluster_probs.empty()) {
    throw config_error("at least one cluster needed");
  }
  double sum = 0.0;
  for (double p : cluster_probs) {
    if (!(p > 0.0)) throw config_error("cluster probabilities must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw config_error("cluster probabilities must sum to one");
  }
  if (cluster_item_tau.size() != cluster_probs.size()) {
    throw config_error("one threshold set needed per cluster");
  }
  for (const auto& items : cluster_item_tau) {
    if (items.size() != static_cast<std::size_t>(num_items)) {
      throw config_error("threshold sets must cover every item");
    }
    for (const ThresholdVector& tau : items) {
      if (tau.size() != static_cast<std::size_t>(max_category)) {
        throw config_error("threshold vectors must have max_category entries");
      }
    }
  }
}

SimConfig SimConfig::paper_grid() {
  SimConfig c;
  c.num_examinees = 3000;
  c.num_items = 10;
  c.max_category = 2;
  c.ability_variance = 2.25;
  c.cluster_probs = {0.5, 0.5};
  c.cluster_item_tau.assign(2, std::vector<ThresholdVector>(10));
  for (int j = 0; j < 10; ++j) {
    const double t1 = -2.3 + 0.45 * j;
    const ThresholdVector tau{t1, t1 + 1.0};
    c.cluster_item_tau[0][static_cast<std::size_t>(j)] = tau;
    c.cluster_item_tau[1][static_cast<std::size_t>(j)] = tau;
  }
  // differential item: same first step, second step split between clusters
  c.cluster_item_tau[0][9] = {-1.25, 0.0};
  c.cluster_item_tau[1][9] = {-1.25, 2.0};
  c.seed = 20240915;
  return c;
}

SimConfig SimConfig::small_dif() {
  SimConfig c;
  c.num_examinees = 500;
  c.num_items = 5;
  c.max_category = 2;
  c.ability_variance = 2.25;
  c.cluster_probs = {0.5, 0.5};
  c.cluster_item_tau.assign(2, std::vector<ThresholdVector>(5));
  const double firsts[5] = {-2.3, -1.4, -0.5, 0.4, -1.25};
  for (int j = 0; j < 5; ++j) {
    const ThresholdVector tau{firsts[j], firsts[j] + 1.0};
    c.cluster_item_tau[0][static_cast<std::size_t>(j)] = tau;
    c.cluster_item_tau[1][static_cast<std::size_t>(j)] = tau;
  }
  c.cluster_item_tau[0][4] = {-1.25, 0.0};
  c.cluster_item_tau[1][4] = {-1.25, 2.0};
  c.seed = 20240915;
  return c;
}

std::pair<RatingDataset, SimTruth> generate(const SimConfig& cfg) {
  cfg.validate();
  RngStream rng(cfg.seed);
  SimTruth truth;
  truth.seed = cfg.seed;
  truth.ability_variance = cfg.ability_variance;
  truth.cluster_probs = cfg.cluster_probs;
  truth.cluster_item_tau = cfg.cluster_item_tau;
  truth.theta.resize(static_cast<std::size_t>(cfg.num_examinees));
  truth.cluster.resize(static_cast<std::size_t>(cfg.num_examinees));

  RatingDataset d;
  d.design = CovariateDesign::item_dummy;
  d.num_examinees = cfg.num_examinees;
  d.num_items = cfg.num_items;
  d.max_category.assign(static_cast<std::size_t>(cfg.num_items),
                        cfg.max_category);
  d.obs.reserve(static_cast<std::size_t>(cfg.num_examinees) *
                static_cast<std::size_t>(cfg.num_items));

  const double sd = std::sqrt(cfg.ability_variance);
  for (int t = 0; t < cfg.num_examinees; ++t) {
    truth.theta[static_cast<std::size_t>(t)] = rng.normal(0.0, sd);
    const double u = rng.uniform();
    double acc = 0.0;
    int c = static_cast<int>(cfg.cluster_probs.size()) - 1;
    for (std::size_t ci = 0; ci < cfg.cluster_probs.size(); ++ci) {
      acc += cfg.cluster_probs[ci];
      if (u <= acc) {
        c = static_cast<int>(ci);
        break;
      }
    }
    truth.cluster[static_cast<std::size_t>(t)] = c;
    for (int j = 0; j < cfg.num_items; ++j) {
      const ThresholdVector& tau =
          cfg.cluster_item_tau[static_cast<std::size_t>(c)]
                              [static_cast<std::size_t>(j)];
      const std::vector<double> p =
          pcm_distribution(truth.theta[static_cast<std::size_t>(t)], tau);
      const double v = rng.uniform();
      double cp = 0.0;
      int y = static_cast<int>(p.size()) - 1;
      for (std::size_t k = 0; k < p.size(); ++k) {
        cp += p[k];
        if (v <= cp) {
          y = static_cast<int>(k);
          break;
        }
      }
      d.obs.push_back({t, j, y});
    }
  }
  d.validate();
  return {std::move(d), std::move(truth)};
}

void save_truth(const SimTruth& truth, const std::string& path) {
  nlohmann::json j;
  j["seed"] = truth.seed;
  j["ability_variance"] = truth.ability_variance;
  j["cluster_probs"] = truth.cluster_probs;
  j["cluster_item_tau"] = truth.cluster_item_tau;
  j["theta"] = truth.theta;
  j["cluster"] = truth.cluster;
  std::ofstream out(path);
  if (!out) throw config_error("cannot write truth file: " + path);
  out << j.dump(2) << "\n";
}

SimTruth load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open truth file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw config_error(path + ": " + e.what());
  }
  SimTruth t;
  try {
    t.seed = j.at("seed").get<std::uint64_t>();
    t.ability_variance = j.at("ability_variance").get<double>();
    t.cluster_probs = j.at("cluster_probs").get<std::vector<double>>();
    t.cluster_item_tau =
        j.at("cluster_item_tau")
            .get<std::vector<std::vector<ThresholdVector>>>();
    t.theta = j.at("theta").get<std::vector<double>>();
    t.cluster = j.at("cluster").get<std::vector<int>>();
  } catch (const std::exception& e) {
    throw config_error(path + ": " + e.what());
  }
  return t;
}

namespace {

std::vector<double> distinct_truths(const SimTruth& truth, int item,
                                    int coord) {
  std::vector<double> vals;
  for (const auto& items : truth.cluster_item_tau) {
    const double v = items[static_cast<std::size_t>(item)]
                          [static_cast<std::size_t>(coord)];
    bool found = false;
    for (double w : vals) {
      if (std::abs(w - v) < 1e-9) {
        found = true;
        break;
      }
    }
    if (!found) vals.push_back(v);
  }
  std::sort(vals.begin(), vals.end());
  return vals;
}

double nearest_distance(double v, const std::vector<double>& pts) {
  double best = std::abs(v - pts.front());
  for (double p : pts) best = std::min(best, std::abs(v - p));
  return best;
}

}  // namespace

RecoveryReport score_recovery(const SimTruth& truth,
                              const PosteriorArchive& archive) {
  if (archive.size() == 0) {
    throw std::invalid_argument("archive has no saved states");
  }
  const RatingDataset& data = archive.data();
  if (truth.cluster_item_tau.empty() ||
      truth.cluster_item_tau.front().size() !=
          static_cast<std::size_t>(data.num_items)) {
    throw config_error("truth and archive disagree on item count");
  }
  RecoveryReport report;
  // pattern lookup by item for mixture items under the dummy design
  std::vector<int> pattern_of_item(static_cast<std::size_t>(data.num_items),
                                   -1);
  for (int q = 0; q < archive.num_patterns(); ++q) {
    const int item = archive.pattern_item(q);
    if (item >= 0) pattern_of_item[static_cast<std::size_t>(item)] = q;
  }
  for (int j = 0; j < data.num_items; ++j) {
    RecoveryItem ri;
    ri.item = j;
    const bool fixed =
        !archive.state(0).fixed_item_tau[static_cast<std::size_t>(j)].empty();
    ri.mixture = !fixed;
    const int m = data.max_category[static_cast<std::size_t>(j)];
    for (int l = 0; l < m; ++l) {
      RecoveryThreshold rt;
      rt.coord = l;
      rt.true_values = distinct_truths(truth, j, l);
      if (fixed) {
        const std::string sel = "tau_fixed[" + std::to_string(j + 1) + "][" +
                                std::to_string(l + 1) + "]";
        const std::vector<double> trace = extract_trace(archive, sel);
        rt.posterior_mean = summarize(trace).mean;
        rt.max_abs_error = 0.0;
        for (double tv : rt.true_values) {
          rt.max_abs_error = std::max(
              rt.max_abs_error, std::abs(tv - rt.posterior_mean));
        }
      } else {
        const int q = pattern_of_item[static_cast<std::size_t>(j)];
        if (q < 0) {
          throw config_error("no covariate pattern for mixture item " +
                             std::to_string(j + 1));
        }
        const DensityEstimate dens = mixing_density(archive, q, l);
        rt.modes = dens.mode_locations;
        // pooled weighted mean doubles as a point summary
        double wsum = 0.0;
        double vsum = 0.0;
        for (std::size_t s = 0; s < archive.size(); ++s) {
          const ArchiveState& st = archive.state(s);
          for (std::size_t k = 0; k < archive.mixture_obs().size(); ++k) {
            if (archive.pattern_of_obs(archive.mixture_obs()[k]) != q) {
              continue;
            }
            const ThresholdVector& tau = st.atom(st.z[k]);
            vsum += tau[static_cast<std::size_t>(l)];
            wsum += 1.0;
          }
        }
        rt.posterior_mean = wsum > 0.0 ? vsum / wsum : 0.0;
        rt.max_abs_error = 0.0;
        std::vector<double> ref = rt.modes;
        if (ref.empty()) ref.push_back(rt.posterior_mean);
        for (double tv : rt.true_values) {
          rt.max_abs_error =
              std::max(rt.max_abs_error, nearest_distance(tv, ref));
        }
      }
      report.max_abs_error =
          std::max(report.max_abs_error, rt.max_abs_error);
      ri.thresholds.push_back(std::move(rt));
    }
    report.items.push_back(std::move(ri));
  }
  return report;
}

std::string RecoveryReport::to_json() const {
  nlohmann::json j;
  j["max_abs_error"] = max_abs_error;
  j["items"] = nlohmann::json::array();
  for (const RecoveryItem& ri : items) {
    nlohmann::json ij;
    ij["item"] = ri.item + 1;
    ij["mixture"] = ri.mixture;
    ij["thresholds"] = nlohmann::json::array();
    for (const RecoveryThreshold& rt : ri.thresholds) {
      nlohmann::json tj;
      tj["index"] = rt.coord + 1;
      tj["true_values"] = rt.true_values;
      tj["posterior_mean"] = rt.posterior_mean;
      tj["modes"] = rt.modes;
      tj["max_abs_error"] = rt.max_abs_error;
      ij["thresholds"].push_back(std::move(tj));
    }
    j["items"].push_back(std::move(ij));
  }
  return j.dump(2);
}

}  // namespace ddprm
