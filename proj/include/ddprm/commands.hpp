#ifndef DDPRM_COMMANDS_HPP
#define DDPRM_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ddprm {

// Command implementations behind the CLI, callable in-process by tests.
// Exit codes: 0 success, 2 configuration or path problems, 1 runtime
// failures.

struct SimulateArgs {
  std::string preset = "paper-sim";
  std::optional<int> examinees;
  std::optional<int> items;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

struct FitArgs {
  std::string config_path;
  std::string preset;
  std::string data_path;
  std::optional<std::int64_t> iterations;
  std::optional<std::int64_t> burnin;
  std::optional<std::int64_t> thin;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains;
  std::string out_dir;
  std::vector<std::string> overrides;  // raw key=value pairs
};

struct CompareArgs {
  std::vector<std::string> inputs;  // [label=]path, .bin archive or .csv table
  std::string report_path;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out,
                 std::ostream& err);
int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareArgs& args, std::ostream& out,
                std::ostream& err);

// Default output directory: the DDPRM_OUT_DIR environment variable when set,
// otherwise the current directory.
std::string default_out_dir();

}  // namespace ddprm

#endif
