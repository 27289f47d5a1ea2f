#pragma once

#include "rfsbound/mcval.hpp"
#include "rfsbound/scenarios.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rfsbound {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error("ConfigError: " + what) {}
};

enum class Mode { RfsBound, EnumPcrlb, Compare, MonteCarlo };

const char* to_string(Mode m);

inline constexpr int kScanCap = 24;
inline constexpr double kPruneEpsMax = 1e-3;

/// One `key = value` assignment and where it came from, for error messages.
struct Setting {
  std::string key;
  std::string value;
  std::string origin;  // "path:line" or "--flag"
};

struct KeyDoc {
  const char* key;
  const char* help;
};

/// Every accepted key with a one-line description.
const std::vector<KeyDoc>& config_keys();

struct RunConfig {
  Mode mode = Mode::RfsBound;
  ScenarioSpec scenario = linear_default();
  double e_scale = 1.0;
  double prune_eps = 0.0;
  std::uint64_t seed = 1;
  std::size_t runs = 1000;
  std::string out;  // empty: CSV to standard output
  std::optional<int> figure;
  FilterConfig filter;
  /// Settings in the order they were applied.
  std::vector<Setting> applied;

  int k_max() const { return scenario.scans; }
};

/// Reads flat `key = value` lines; `#` starts a comment. Unknown keys and
/// malformed lines raise ConfigError naming the line.
std::vector<Setting> parse_config_text(const std::string& text, const std::string& origin);
std::vector<Setting> parse_config(const std::string& path);

/// Applies `settings` in order on top of the defaults of the scenario they
/// select (the last `scenario` key wins; linear when absent).
RunConfig resolve_config(Mode mode, const std::vector<Setting>& settings);

}  // namespace rfsbound
