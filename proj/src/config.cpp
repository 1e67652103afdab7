#include "ddprm/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "ddprm/common.hpp"

namespace ddprm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return from_string(os.str(), path);
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text,
                                           const std::string& origin) {
  KeyValueConfig cfg;
  std::istringstream is(text);
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": empty key");
    }
    cfg.kv_[key] = value;
  }
  return cfg;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const {
  return kv_.contains(key);
}

std::optional<std::string> KeyValueConfig::raw(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key,
                                  double fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw config_error("key " + key + ": bad number '" + it->second + "'");
  }
}

std::int64_t KeyValueConfig::get_int(const std::string& key,
                                     std::int64_t fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw config_error("key " + key + ": bad integer '" + it->second + "'");
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw config_error("key " + key + ": bad boolean '" + it->second + "'");
}

std::vector<std::string> KeyValueConfig::get_list(
    const std::string& key) const {
  std::vector<std::string> out;
  const auto it = kv_.find(key);
  if (it == kv_.end()) return out;
  std::istringstream is(it->second);
  std::string field;
  while (std::getline(is, field, ',')) {
    field = trim(field);
    if (!field.empty()) out.push_back(field);
  }
  return out;
}

void RunConfig::resolve_item_modes(int num_items) {
  hyper.item_mode.assign(static_cast<std::size_t>(num_items),
                         ItemMode::fixed);
  if (mixture_items.size() == 1 && mixture_items[0] == -1) {
    std::fill(hyper.item_mode.begin(), hyper.item_mode.end(),
              ItemMode::mixed);
    return;
  }
  for (int j : mixture_items) {
    if (j < 0 || j >= num_items) {
      throw config_error("items.mixed names item " + std::to_string(j + 1) +
                         " but the data has " + std::to_string(num_items) +
                         " items");
    }
    hyper.item_mode[static_cast<std::size_t>(j)] = ItemMode::mixed;
  }
}

RunConfig RunConfig::from_config(const KeyValueConfig& kv) {
  static const std::vector<std::string> known = {
      "data.path",          "data.design",
      "items.mixed",        "prior.sigma2.shape",
      "prior.sigma2.rate",  "prior.sigma2.fixed",
      "prior.tau.scale",    "prior.tau_fixed.scale",
      "prior.alpha.shape",  "prior.alpha.rate",
      "prior.alpha.fixed",  "prior.gamma.min",
      "prior.gamma.max",    "prior.psi.min",
      "prior.psi.max",      "prior.psi.fixed",
      "chain.iterations",   "chain.burnin",
      "chain.thin",         "chain.seed",
      "chain.chains",       "chain.progress_every",
      "chain.checkpoint_every",
      "engine.weights",     "engine.coef_target",
      "engine.step.theta",  "engine.step.tau",
      "engine.step.gamma",  "engine.step.psi",
      "out.dir",            "out.traces",
      "out.densities"};
  for (const auto& [key, value] : kv.entries()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw config_error("unknown config key: " + key);
    }
  }

  RunConfig rc;
  rc.data_path = kv.get_string("data.path", "");
  const std::string design = kv.get_string("data.design", "dummy");
  if (design == "dummy") {
    rc.design = CovariateDesign::item_dummy;
  } else if (design == "explicit") {
    rc.design = CovariateDesign::explicit_columns;
  } else {
    throw config_error("data.design must be dummy or explicit");
  }

  const std::vector<std::string> mixed = kv.get_list("items.mixed");
  if (mixed.empty() ||
      (mixed.size() == 1 && (mixed[0] == "all"))) {
    rc.mixture_items = {-1};
  } else if (mixed.size() == 1 && mixed[0] == "none") {
    rc.mixture_items.clear();
  } else {
    for (const std::string& tok : mixed) {
      try {
        std::size_t pos = 0;
        const int j = std::stoi(tok, &pos);
        if (pos != tok.size() || j < 1) throw std::invalid_argument(tok);
        rc.mixture_items.push_back(j - 1);
      } catch (const std::exception&) {
        throw config_error("items.mixed: bad item '" + tok + "'");
      }
    }
  }

  HyperParams& h = rc.hyper;
  h.a_sigma2 = kv.get_double("prior.sigma2.shape", h.a_sigma2);
  h.b_sigma2 = kv.get_double("prior.sigma2.rate", h.b_sigma2);
  if (kv.has("prior.sigma2.fixed")) {
    h.fixed_sigma2 = kv.get_double("prior.sigma2.fixed", 0.0);
  }
  h.tau_prior.scale = kv.get_double("prior.tau.scale", h.tau_prior.scale);
  h.tau_fixed_prior.scale =
      kv.get_double("prior.tau_fixed.scale", h.tau_fixed_prior.scale);
  h.a_alpha = kv.get_double("prior.alpha.shape", h.a_alpha);
  h.b_alpha = kv.get_double("prior.alpha.rate", h.b_alpha);
  if (kv.has("prior.alpha.fixed")) {
    h.fixed_alpha = kv.get_double("prior.alpha.fixed", 0.0);
  }
  h.gamma_bounds.a = kv.get_double("prior.gamma.min", h.gamma_bounds.a);
  h.gamma_bounds.b = kv.get_double("prior.gamma.max", h.gamma_bounds.b);
  h.psi_bounds.a = kv.get_double("prior.psi.min", h.psi_bounds.a);
  h.psi_bounds.b = kv.get_double("prior.psi.max", h.psi_bounds.b);
  if (kv.has("prior.psi.fixed")) {
    h.fixed_psi = kv.get_double("prior.psi.fixed", 0.0);
  }

  rc.chain.iterations = kv.get_int("chain.iterations", rc.chain.iterations);
  rc.chain.burnin = kv.get_int("chain.burnin", rc.chain.burnin);
  rc.chain.thin = kv.get_int("chain.thin", rc.chain.thin);
  rc.chain.seed =
      static_cast<std::uint64_t>(kv.get_int("chain.seed", 1));
  rc.chains = static_cast<int>(kv.get_int("chain.chains", 1));
  rc.chain.progress_every = kv.get_int("chain.progress_every", 0);
  rc.chain.checkpoint_every = kv.get_int("chain.checkpoint_every", 0);
  if (rc.chains < 1) throw config_error("chain.chains must be positive");

  const std::string weights = kv.get_string("engine.weights", "localized");
  if (weights == "localized") {
    rc.engine.weights = EngineOptions::Weights::localized;
  } else if (weights == "global") {
    rc.engine.weights = EngineOptions::Weights::global;
  } else {
    throw config_error("engine.weights must be localized or global");
  }
  const std::string target =
      kv.get_string("engine.coef_target", "local-weights");
  if (target == "local-weights") {
    rc.engine.coef_target = EngineOptions::CoefficientTarget::local_weights;
  } else if (target == "global-prefix") {
    rc.engine.coef_target = EngineOptions::CoefficientTarget::global_prefix;
  } else {
    throw config_error(
        "engine.coef_target must be local-weights or global-prefix");
  }
  rc.engine.init_step_theta =
      kv.get_double("engine.step.theta", rc.engine.init_step_theta);
  rc.engine.init_step_tau =
      kv.get_double("engine.step.tau", rc.engine.init_step_tau);
  rc.engine.init_step_gamma =
      kv.get_double("engine.step.gamma", rc.engine.init_step_gamma);
  rc.engine.init_step_psi =
      kv.get_double("engine.step.psi", rc.engine.init_step_psi);

  rc.out_dir = kv.get_string("out.dir", "");
  rc.extra_traces = kv.get_list("out.traces");
  rc.write_densities = kv.get_bool("out.densities", true);
  return rc;
}

const std::map<std::string, std::string>& fit_presets() {
  static const std::map<std::string, std::string> presets = {
      {"paper-sim",
       "# two-cluster simulation design, studied item modeled as a mixture\n"
       "data.design = dummy\n"
       "items.mixed = 10\n"
       "prior.sigma2.shape = 1\n"
       "prior.sigma2.rate = 1\n"
       "prior.tau.scale = 2\n"
       "prior.tau_fixed.scale = 10\n"
       "prior.alpha.shape = 1\n"
       "prior.alpha.rate = 1\n"
       "prior.gamma.min = 1\n"
       "prior.gamma.max = 745\n"
       "prior.psi.fixed = 5\n"
       "chain.iterations = 200000\n"
       "chain.burnin = 100000\n"
       "chain.thin = 5\n"},
      {"verbal-aggression",
       "# survey-scale run: every item a mixture item, unit ability scale\n"
       "data.design = dummy\n"
       "items.mixed = all\n"
       "prior.sigma2.fixed = 1\n"
       "prior.tau.scale = 5\n"
       "prior.alpha.shape = 1\n"
       "prior.alpha.rate = 1\n"
       "prior.gamma.min = 1\n"
       "prior.gamma.max = 745\n"
       "prior.psi.min = 0.5\n"
       "prior.psi.max = 20\n"
       "chain.iterations = 200000\n"
       "chain.burnin = 100000\n"
       "chain.thin = 5\n"}};
  return presets;
}

}  // namespace ddprm
