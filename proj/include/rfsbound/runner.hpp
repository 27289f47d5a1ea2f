#pragma once

#include "rfsbound/bound.hpp"
#include "rfsbound/config.hpp"
#include "rfsbound/mcval.hpp"

#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfsbound {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error("IoError: " + what) {}
};

struct RunReport {
  std::vector<std::string> files;
  double wall_seconds = 0.0;
  double dropped_mass = 0.0;
  std::size_t psd_failures = 0;
  std::size_t degenerate_runs = 0;
};

/// Version string baked in at configure time.
const char* version_string();

/// CSV text for one run. `enum_series` adds enum_rmse_* columns and `mc`
/// adds mc_* columns.
std::string render_csv(const BoundSeries& series, const BoundSeries* enum_series,
                       const MonteCarloSeries* mc);

/// Runs the configured pipeline (or figure grid) and writes the CSV and its
/// manifest. Without an output path the CSV goes to `stdout_sink` and no
/// manifest is written.
RunReport run(const RunConfig& config, std::ostream& stdout_sink);

/// Process exit status for an exception escaping `run`.
int exit_code_for(const std::exception& e);

/// Calls `body`, printing any escaping error as one line on `err`.
int guarded(const std::function<void()>& body, std::ostream& err);

}  // namespace rfsbound
