#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ssp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // unexpected internal error
inline constexpr int kExitUsage = 2;    // bad arguments, config, or input files
inline constexpr int kExitNumeric = 3;  // non-finite values during training

std::string_view tool_version();

// One parsed invocation. Options by command:
//   gen       count, kind (train | eval), pairs
//   pretrain  data, resume, validation
//   label     checkpoint, data
//   train     data, resume, validation
//   eval      eval-set, pairs, name; inputs = checkpoints
//   compare   inputs = report JSON files
struct Request {
  std::string command;
  std::string config_path;
  std::optional<std::string> preset;
  std::optional<std::string> scale;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::map<std::string, std::string> options;
  std::vector<std::string> inputs;
  // Resolved configuration snapshot. When set (a manifest rerun) it
  // replaces config_path, preset, scale, seed and workers.
  std::string config_text;
  bool quiet = false;
};

// Executes the request and returns the process exit code. Progress goes to
// `log`, results (paths, tables) to `out`.
int run(const Request& request, std::ostream& out, std::ostream& log);

// Rebuilds the request recorded in a manifest.json.
Request request_from_manifest(const std::string& path);

// Where a request's manifest is written.
std::string manifest_path(const Request& request);

}  // namespace ssp::cli
