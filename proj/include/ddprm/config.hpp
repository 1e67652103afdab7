#ifndef DDPRM_CONFIG_HPP
#define DDPRM_CONFIG_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddprm/chain.hpp"
#include "ddprm/dataset.hpp"
#include "ddprm/priors.hpp"

namespace ddprm {

// Flat key-value run configuration: one `dotted.key = value` per line, #
// comments, later keys override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text,
                                    const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  std::optional<std::string> raw(const std::string& key) const;

  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

// Everything a fit needs, assembled from a config file plus overrides.
struct RunConfig {
  std::string data_path;
  CovariateDesign design = CovariateDesign::item_dummy;
  HyperParams hyper;
  ChainConfig chain;
  EngineOptions engine;
  int chains = 1;
  std::string out_dir;
  std::vector<std::string> extra_traces;
  bool write_densities = true;

  // item_mode needs the item count, known only once data is loaded;
  // mixture_items holds the raw designation until then
  std::vector<int> mixture_items;  // 0-based; {-1} encodes "all"
  void resolve_item_modes(int num_items);

  static RunConfig from_config(const KeyValueConfig& kv);
};

// Built-in configuration presets (also shipped under presets/).
const std::map<std::string, std::string>& fit_presets();

}  // namespace ddprm

#endif
