#include "ddprm/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <thread>

#include "ddprm/common.hpp"
#include "ddprm/comparison.hpp"
#include "ddprm/config.hpp"
#include "ddprm/posterior.hpp"
#include "ddprm/simulate.hpp"

namespace ddprm {

namespace {

namespace fs = std::filesystem;

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

std::string strip(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

int classify_failure(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (dynamic_cast<const config_error*>(&e) != nullptr) return 2;
  return 1;
}

bool require_dir(const std::string& dir, std::ostream& err) {
  if (dir.empty() || !fs::is_directory(dir)) {
    err << "error: output directory does not exist: "
        << (dir.empty() ? "<none>" : dir) << "\n";
    return false;
  }
  return true;
}

nlohmann::json stats_json(const SummaryStats& s, double mcci) {
  nlohmann::json j;
  j["mean"] = s.mean;
  j["sd"] = s.sd;
  j["median"] = s.median;
  j["q025"] = s.q025;
  j["q975"] = s.q975;
  j["mcci_halfwidth"] = mcci;
  return j;
}

nlohmann::json trace_stats(const PosteriorArchive& a,
                           const std::string& selector) {
  const std::vector<double> trace = extract_trace(a, selector);
  double mcci = 0.0;
  try {
    mcci = batch_means_halfwidth(trace);
  } catch (const std::invalid_argument&) {
    mcci = 0.0;  // trace too short for batching
  }
  return stats_json(summarize(trace), mcci);
}

void write_summary(const PosteriorArchive& a, const RunConfig& rc,
                   const PredictionTable& table,
                   const std::string& path) {
  nlohmann::json j;
  j["data"]["path"] = rc.data_path;
  j["data"]["observations"] = a.data().obs.size();
  j["data"]["examinees"] = a.data().num_examinees;
  j["data"]["items"] = a.data().num_items;
  j["chain"]["iterations"] = a.info().iterations;
  j["chain"]["burnin"] = a.info().burnin;
  j["chain"]["thin"] = a.info().thin;
  j["chain"]["seed"] = a.info().seed;
  j["chain"]["chain_id"] = a.info().chain_id;
  j["chain"]["saved_states"] = a.size();
  j["chain"]["weights"] =
      a.info().weights_mode == 1 ? "global" : "localized";
  j["acceptance"] = a.info().acceptance;

  const bool has_mixture = !a.mixture_obs().empty();
  j["parameters"]["sigma2"] = trace_stats(a, "sigma2");
  if (has_mixture) {
    j["parameters"]["alpha"] = trace_stats(a, "alpha");
    if (a.info().weights_mode == 0) {
      const std::size_t p = a.state(0).gamma.size();
      for (std::size_t c = 1; c <= p; ++c) {
        j["parameters"]["gamma"].push_back(
            trace_stats(a, "gamma[" + std::to_string(c) + "]"));
      }
      const std::size_t np = a.state(0).psi.size();
      for (std::size_t q = 1; q <= np; ++q) {
        j["parameters"]["psi"].push_back(
            trace_stats(a, "psi[" + std::to_string(q) + "]"));
      }
    }
  }

  // ability summaries across examinees, based on per-examinee posterior means
  {
    const std::size_t n = a.state(0).theta.size();
    std::vector<double> means(n, 0.0);
    for (std::size_t s = 0; s < a.size(); ++s) {
      for (std::size_t t = 0; t < n; ++t) {
        means[t] += a.state(s).theta[t];
      }
    }
    for (double& m : means) m /= static_cast<double>(a.size());
    const SummaryStats agg = summarize(means);
    j["theta"]["mean_of_means"] = agg.mean;
    j["theta"]["sd_of_means"] = agg.sd;
    j["theta"]["min"] = *std::min_element(means.begin(), means.end());
    j["theta"]["max"] = *std::max_element(means.begin(), means.end());
    j["theta"]["posterior_means"] = means;
  }

  for (int item = 0; item < a.data().num_items; ++item) {
    nlohmann::json ij;
    ij["item"] = item + 1;
    const bool fixed =
        !a.state(0).fixed_item_tau[static_cast<std::size_t>(item)].empty();
    ij["mode"] = fixed ? "fixed" : "mixture";
    if (fixed) {
      const int m = a.data().max_category[static_cast<std::size_t>(item)];
      for (int l = 1; l <= m; ++l) {
        ij["tau"].push_back(trace_stats(
            a, "tau_fixed[" + std::to_string(item + 1) + "][" +
                   std::to_string(l) + "]"));
      }
    } else {
      int pattern = -1;
      for (int q = 0; q < a.num_patterns(); ++q) {
        if (a.pattern_item(q) == item) pattern = q;
      }
      ij["pattern"] = pattern + 1;
      if (pattern >= 0) {
        const int m = a.data().max_category[static_cast<std::size_t>(item)];
        for (int l = 0; l < m; ++l) {
          const DensityEstimate d = mixing_density(a, pattern, l);
          nlohmann::json tj;
          tj["index"] = l + 1;
          tj["bandwidth"] = d.bandwidth;
          tj["modes"] = d.mode_locations;
          tj["mode_heights"] = d.mode_heights;
          ij["thresholds"].push_back(std::move(tj));
        }
      }
    }
    j["items"].push_back(std::move(ij));
  }

  const DCriterionResult d = d_criterion(table);
  j["d_criterion"]["goodness_of_fit"] = d.goodness_of_fit;
  j["d_criterion"]["penalty"] = d.penalty;
  j["d_criterion"]["d"] = d.d;
  {
    const std::vector<double> trace = d_criterion_trace(a);
    double mcci = 0.0;
    try {
      mcci = batch_means_halfwidth(trace);
    } catch (const std::invalid_argument&) {
      mcci = 0.0;
    }
    j["d_criterion"]["mcci_halfwidth"] = mcci;
  }

  std::ofstream out(path);
  if (!out) throw config_error("cannot write summary: " + path);
  out << j.dump(2) << "\n";
}

void write_densities(const PosteriorArchive& a, const std::string& dir,
                     const std::string& suffix) {
  if (a.mixture_obs().empty()) return;
  fs::create_directory(dir);
  char buf[32];
  const int m = a.data().max_category[static_cast<std::size_t>(
      a.data().obs[a.mixture_obs()[0]].item)];
  for (int q = 0; q < a.num_patterns(); ++q) {
    const int item = a.pattern_item(q);
    const std::string tag = item >= 0
                                ? "item" + std::to_string(item + 1)
                                : "pattern" + std::to_string(q + 1);
    for (int l = 0; l < m; ++l) {
      const DensityEstimate d = mixing_density(a, q, l);
      const std::string path = dir + "/" + tag + "_tau" +
                               std::to_string(l + 1) + suffix + ".csv";
      std::ofstream out(path);
      if (!out) throw config_error("cannot write density: " + path);
      out << "value,density\n";
      for (std::size_t g = 0; g < d.grid.size(); ++g) {
        std::snprintf(buf, sizeof buf, "%.17g", d.grid[g]);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", d.density[g]);
        out << buf << "\n";
      }
    }
  }
}

}  // namespace

std::string default_out_dir() {
  const char* env = std::getenv("DDPRM_OUT_DIR");
  if (env != nullptr && env[0] != '\0') return env;
  return ".";
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out,
                 std::ostream& err) {
  try {
    SimConfig cfg;
    if (args.preset == "paper-sim") {
      cfg = SimConfig::paper_grid();
    } else if (args.preset == "small-dif") {
      cfg = SimConfig::small_dif();
    } else {
      err << "error: unknown simulate preset: " << args.preset << "\n";
      return 2;
    }
    if (args.examinees) cfg.num_examinees = *args.examinees;
    if (args.items && *args.items != cfg.num_items) {
      // rebuild the grid at the new length, keeping the split last item
      const int J = *args.items;
      if (J < 1) {
        err << "error: item count must be positive\n";
        return 2;
      }
      cfg.num_items = J;
      cfg.cluster_item_tau.assign(
          2, std::vector<ThresholdVector>(static_cast<std::size_t>(J)));
      for (int j = 0; j < J; ++j) {
        const double t1 = -2.3 + 0.45 * j;
        cfg.cluster_item_tau[0][static_cast<std::size_t>(j)] = {t1, t1 + 1.0};
        cfg.cluster_item_tau[1][static_cast<std::size_t>(j)] = {t1, t1 + 1.0};
      }
      cfg.cluster_item_tau[0][static_cast<std::size_t>(J - 1)] = {-1.25, 0.0};
      cfg.cluster_item_tau[1][static_cast<std::size_t>(J - 1)] = {-1.25, 2.0};
    }
    if (args.seed) cfg.seed = *args.seed;
    const std::string dir =
        args.out_dir.empty() ? default_out_dir() : args.out_dir;
    if (!require_dir(dir, err)) return 2;

    const auto [data, truth] = generate(cfg);
    const std::string data_path = dir + "/dataset.csv";
    const std::string truth_path = dir + "/truth.json";
    data.to_csv(data_path);
    save_truth(truth, truth_path);
    out << "wrote " << data_path << " (" << data.obs.size() << " rows)\n";
    out << "wrote " << truth_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    return classify_failure(e, err);
  }
}

int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err) {
  try {
    KeyValueConfig kv;
    if (!args.preset.empty()) {
      const auto& presets = fit_presets();
      const auto it = presets.find(args.preset);
      if (it == presets.end()) {
        err << "error: unknown fit preset: " << args.preset << "\n";
        return 2;
      }
      kv = KeyValueConfig::from_string(it->second, "preset:" + args.preset);
    }
    if (!args.config_path.empty()) {
      const KeyValueConfig file = KeyValueConfig::from_file(args.config_path);
      for (const auto& [k, v] : file.entries()) kv.set(k, v);
    }
    for (const std::string& ov : args.overrides) {
      const auto eq = ov.find('=');
      if (eq == std::string::npos) {
        err << "error: override must be key=value: " << ov << "\n";
        return 2;
      }
      kv.set(strip(ov.substr(0, eq)), strip(ov.substr(eq + 1)));
    }
    if (!args.data_path.empty()) kv.set("data.path", args.data_path);
    if (args.iterations) {
      kv.set("chain.iterations", std::to_string(*args.iterations));
    }
    if (args.burnin) kv.set("chain.burnin", std::to_string(*args.burnin));
    if (args.thin) kv.set("chain.thin", std::to_string(*args.thin));
    if (args.seed) kv.set("chain.seed", std::to_string(*args.seed));
    if (args.chains) kv.set("chain.chains", std::to_string(*args.chains));
    if (!args.out_dir.empty()) kv.set("out.dir", args.out_dir);

    RunConfig rc = RunConfig::from_config(kv);
    if (rc.data_path.empty()) {
      err << "error: no data file given (data.path or --data)\n";
      return 2;
    }
    if (rc.out_dir.empty()) rc.out_dir = default_out_dir();
    if (!require_dir(rc.out_dir, err)) return 2;

    RatingDataset data =
        RatingDataset::from_csv(rc.data_path, rc.design);
    rc.resolve_item_modes(data.num_items);
    rc.hyper.validate(data.num_items);
    rc.chain.validate();

    const int k = rc.chains;
    std::vector<std::optional<PosteriorArchive>> results(
        static_cast<std::size_t>(k));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(k));
    {
      std::vector<std::thread> threads;
      threads.reserve(static_cast<std::size_t>(k));
      for (int c = 0; c < k; ++c) {
        threads.emplace_back([&, c]() {
          try {
            ChainConfig cc = rc.chain;
            cc.chain_id = c;
            if (c == 0 && cc.progress_every > 0) {
              cc.progress_stream = &err;
            }
            if (cc.checkpoint_every > 0) {
              cc.checkpoint_path = rc.out_dir + "/checkpoint_chain" +
                                   std::to_string(c) + ".bin";
            }
            results[static_cast<std::size_t>(c)] =
                run_chain(data, rc.hyper, cc, rc.engine);
          } catch (...) {
            failures[static_cast<std::size_t>(c)] = std::current_exception();
          }
        });
      }
      for (std::thread& t : threads) t.join();
    }
    for (const std::exception_ptr& ep : failures) {
      if (ep) std::rethrow_exception(ep);
    }

    for (int c = 0; c < k; ++c) {
      const PosteriorArchive& a = *results[static_cast<std::size_t>(c)];
      const std::string sfx = k > 1 ? "_chain" + std::to_string(c) : "";
      const std::string archive_path = rc.out_dir + "/archive" + sfx + ".bin";
      a.save(archive_path);

      const PredictionTable table = prediction_table(a, "ddprm" + sfx);
      export_predictions(table, rc.out_dir + "/predictions" + sfx + ".csv");

      std::vector<std::string> selectors = {"sigma2", "loglik"};
      if (!a.mixture_obs().empty()) {
        selectors.push_back("alpha");
        if (a.info().weights_mode == 0) {
          for (std::size_t cj = 1; cj <= a.state(0).gamma.size(); ++cj) {
            selectors.push_back("gamma[" + std::to_string(cj) + "]");
          }
          for (std::size_t q = 1; q <= a.state(0).psi.size(); ++q) {
            selectors.push_back("psi[" + std::to_string(q) + "]");
          }
        }
      }
      for (const std::string& extra : rc.extra_traces) {
        if (std::find(selectors.begin(), selectors.end(), extra) ==
            selectors.end()) {
          selectors.push_back(extra);
        }
      }
      export_traces(a, selectors, rc.out_dir + "/traces" + sfx + ".csv");

      if (rc.write_densities) {
        write_densities(a, rc.out_dir + "/densities", sfx);
      }
      write_summary(a, rc, table, rc.out_dir + "/summary" + sfx + ".json");
      out << "chain " << c << ": archive " << archive_path << ", "
          << a.size() << " saved states\n";
    }
    return 0;
  } catch (const std::exception& e) {
    return classify_failure(e, err);
  }
}

int cmd_compare(const CompareArgs& args, std::ostream& out,
                std::ostream& err) {
  try {
    if (args.inputs.empty()) {
      err << "error: nothing to compare\n";
      return 2;
    }
    std::vector<PredictionTable> tables;
    for (const std::string& input : args.inputs) {
      std::string label;
      std::string path = input;
      const auto eq = input.find('=');
      if (eq != std::string::npos &&
          input.find('/') > eq) {
        label = input.substr(0, eq);
        path = input.substr(eq + 1);
      }
      if (label.empty()) label = stem_of(path);
      bool is_archive = false;
      {
        std::ifstream probe(path, std::ios::binary);
        if (!probe) throw config_error("cannot open input: " + path);
        char head[8] = {};
        probe.read(head, sizeof head);
        is_archive = probe.gcount() == 8 &&
                     std::string(head, 8) == "DDPRMA01";
      }
      if (is_archive) {
        const PosteriorArchive a = PosteriorArchive::load(path);
        tables.push_back(prediction_table(a, label));
      } else {
        tables.push_back(import_external_predictions(path, label));
      }
    }
    const ModelComparison cmp = compare_models(tables);
    out << "model";
    for (int i = 0; i < 20 - 5; ++i) out << ' ';
    out << "D          GF         Pen\n";
    char buf[128];
    for (const auto& e : cmp.entries) {
      std::snprintf(buf, sizeof buf, "%-20s%-11.2f%-11.2f%-11.2f\n",
                    e.label.c_str(), e.d.d, e.d.goodness_of_fit,
                    e.d.penalty);
      out << buf;
    }
    if (!args.report_path.empty()) {
      nlohmann::json j;
      for (const auto& e : cmp.entries) {
        nlohmann::json ej;
        ej["label"] = e.label;
        ej["d"] = e.d.d;
        ej["goodness_of_fit"] = e.d.goodness_of_fit;
        ej["penalty"] = e.d.penalty;
        j["models"].push_back(std::move(ej));
      }
      std::ofstream rep(args.report_path);
      if (!rep) {
        throw config_error("cannot write report: " + args.report_path);
      }
      rep << j.dump(2) << "\n";
      out << "wrote " << args.report_path << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    return classify_failure(e, err);
  }
}

}  // namespace ddprm
