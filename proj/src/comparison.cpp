#include "ddprm/comparison.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ddprm/common.hpp"
#include "ddprm/model_core.hpp"

namespace ddprm {

void PredictionTable::validate() const {
  if (y.empty()) throw config_error("prediction table is empty");
  if (expectation.size() != y.size() || variance.size() != y.size()) {
    throw config_error("prediction table columns differ in length");
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0) throw config_error("negative rating in prediction table");
    if (!std::isfinite(expectation[i]) || !std::isfinite(variance[i]) ||
        variance[i] < 0.0) {
      throw config_error("bad moments at observation " +
                         std::to_string(i + 1));
    }
  }
}

DCriterionResult d_criterion(const PredictionTable& table) {
  table.validate();
  DCriterionResult r;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double e = static_cast<double>(table.y[i]) - table.expectation[i];
    r.goodness_of_fit += e * e;
    r.penalty += table.variance[i];
  }
  r.d = r.goodness_of_fit + r.penalty;
  return r;
}

PredictionTable prediction_table(const PosteriorArchive& a,
                                 std::string label) {
  PredictionTable t;
  t.label = std::move(label);
  const std::size_t n = a.data().obs.size();
  t.y.resize(n);
  t.expectation.resize(n);
  t.variance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.y[i] = a.data().obs[i].rating;
    const auto [e, v] = predictive_mean_var(a, static_cast<int>(i));
    t.expectation[i] = e;
    t.variance[i] = v;
  }
  return t;
}

std::vector<double> d_criterion_trace(const PosteriorArchive& a) {
  const std::size_t S = a.size();
  if (S == 0) throw std::invalid_argument("archive has no saved states");
  const std::size_t n = a.data().obs.size();
  std::vector<double> trace(S, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int t = a.data().obs[i].examinee;
    for (std::size_t s = 0; s < S; ++s) {
      const ThresholdVector& tau = a.thresholds_for(s, static_cast<int>(i));
      const double theta = a.state(s).theta[static_cast<std::size_t>(t)];
      const auto [mu, v] = pcm_mean_var(theta, tau);
      const double e = static_cast<double>(a.data().obs[i].rating) - mu;
      trace[s] += e * e + v;
    }
  }
  return trace;
}

PredictionTable import_external_predictions(const std::string& path,
                                            std::string label) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open prediction file: " + path);
  PredictionTable t;
  t.label = label.empty() ? path : std::move(label);
  std::string line;
  long line_no = 0;
  bool saw_header = false;
  long expected_index = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    {
      std::istringstream is(line);
      std::string field;
      while (std::getline(is, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        f.push_back(b == std::string::npos ? std::string()
                                           : field.substr(b, e - b + 1));
      }
    }
    if (!saw_header) {
      saw_header = true;
      if (f.size() != 4 || f[0] != "obs_index" || f[1] != "y" ||
          f[2] != "E" || f[3] != "Var") {
        throw config_error(path + ":" + std::to_string(line_no) +
                           ": header must be obs_index,y,E,Var");
      }
      continue;
    }
    if (f.size() != 4) {
      throw config_error(path + ":" + std::to_string(line_no) +
                         ": expected 4 fields, got " +
                         std::to_string(f.size()));
    }
    const auto bad = [&](const char* what, const std::string& v) {
      return config_error(path + ":" + std::to_string(line_no) + ": bad " +
                          what + " '" + v + "'");
    };
    long idx = 0;
    {
      const auto r = std::from_chars(f[0].data(), f[0].data() + f[0].size(), idx);
      if (r.ec != std::errc() || r.ptr != f[0].data() + f[0].size()) {
        throw bad("obs_index", f[0]);
      }
    }
    if (idx != expected_index) {
      throw config_error(path + ":" + std::to_string(line_no) +
                         ": obs_index must run 1,2,... (expected " +
                         std::to_string(expected_index) + ", got " +
                         std::to_string(idx) + ")");
    }
    ++expected_index;
    int y = 0;
    {
      const auto r = std::from_chars(f[1].data(), f[1].data() + f[1].size(), y);
      if (r.ec != std::errc() || r.ptr != f[1].data() + f[1].size() || y < 0) {
        throw bad("y", f[1]);
      }
    }
    double e = 0.0;
    double v = 0.0;
    try {
      std::size_t pos = 0;
      e = std::stod(f[2], &pos);
      if (pos != f[2].size()) throw std::invalid_argument(f[2]);
    } catch (const std::exception&) {
      throw bad("E", f[2]);
    }
    try {
      std::size_t pos = 0;
      v = std::stod(f[3], &pos);
      if (pos != f[3].size()) throw std::invalid_argument(f[3]);
    } catch (const std::exception&) {
      throw bad("Var", f[3]);
    }
    if (!std::isfinite(e) || !std::isfinite(v) || v < 0.0) {
      throw config_error(path + ":" + std::to_string(line_no) +
                         ": moments must be finite with Var >= 0");
    }
    t.y.push_back(y);
    t.expectation.push_back(e);
    t.variance.push_back(v);
  }
  if (!saw_header) throw config_error(path + ": empty file");
  t.validate();
  return t;
}

void export_predictions(const PredictionTable& table,
                        const std::string& path) {
  table.validate();
  std::ofstream out(path);
  if (!out) throw config_error("cannot write prediction file: " + path);
  out << "obs_index,y,E,Var\n";
  char buf[32];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << i + 1 << ',' << table.y[i];
    std::snprintf(buf, sizeof buf, "%.17g", table.expectation[i]);
    out << ',' << buf;
    std::snprintf(buf, sizeof buf, "%.17g", table.variance[i]);
    out << ',' << buf << "\n";
  }
}

ModelComparison compare_models(const std::vector<PredictionTable>& tables) {
  if (tables.empty()) throw config_error("nothing to compare");
  for (const PredictionTable& t : tables) {
    if (t.size() != tables.front().size()) {
      throw config_error("prediction tables cover different numbers of "
                         "observations (" +
                         tables.front().label + " has " +
                         std::to_string(tables.front().size()) + ", " +
                         t.label + " has " + std::to_string(t.size()) + ")");
    }
    if (t.y != tables.front().y) {
      throw config_error("prediction tables disagree on observed ratings (" +
                         tables.front().label + " vs " + t.label + ")");
    }
  }
  ModelComparison cmp;
  for (const PredictionTable& t : tables) {
    cmp.entries.push_back({t.label, d_criterion(t)});
  }
  std::stable_sort(cmp.entries.begin(), cmp.entries.end(),
                   [](const auto& a, const auto& b) { return a.d.d < b.d.d; });
  return cmp;
}

namespace {

BaselineResult finish_baseline(PosteriorArchive archive, std::string label) {
  BaselineResult r{std::move(archive), {}, {}, 0.0};
  r.table = prediction_table(r.archive, std::move(label));
  r.d = d_criterion(r.table);
  const std::vector<double> trace = d_criterion_trace(r.archive);
  r.d_halfwidth = batch_means_halfwidth(trace);
  return r;
}

}  // namespace

BaselineResult fit_pcm_baseline(const RatingDataset& data,
                                const HyperParams& hyper,
                                const ChainConfig& cfg) {
  HyperParams h = hyper;
  h.item_mode.assign(static_cast<std::size_t>(data.num_items),
                     ItemMode::fixed);
  EngineOptions opts;
  return finish_baseline(run_chain(data, h, cfg, opts), "pcm");
}

BaselineResult fit_dp_pcm_baseline(const RatingDataset& data,
                                   const HyperParams& hyper,
                                   const ChainConfig& cfg) {
  HyperParams h = hyper;
  h.item_mode.assign(static_cast<std::size_t>(data.num_items),
                     ItemMode::mixed);
  EngineOptions opts;
  opts.weights = EngineOptions::Weights::global;
  return finish_baseline(run_chain(data, h, cfg, opts), "dp-pcm");
}

}  // namespace ddprm
