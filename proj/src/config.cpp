#include "rfsbound/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace rfsbound {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const std::set<std::string>& bearings_only_keys() {
  static const std::set<std::string> keys{"sigma_z_deg", "omega_deg", "ownship"};
  return keys;
}

const std::set<std::string>& linear_only_keys() {
  static const std::set<std::string> keys{"sigma_x", "sigma_y"};
  return keys;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(const Setting& s, const std::string& why) {
  throw ConfigError("key '" + s.key + "' at " + s.origin + ": " + why);
}

double to_double(const Setting& s) {
  double v = 0.0;
  const char* begin = s.value.data();
  const char* end = begin + s.value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(s, "expected a number, got '" + s.value + "'");
  }
  return v;
}

std::int64_t to_int(const Setting& s) {
  std::int64_t v = 0;
  const char* begin = s.value.data();
  const char* end = begin + s.value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    fail(s, "expected an integer, got '" + s.value + "'");
  }
  return v;
}

StateVec to_state(const Setting& s) {
  StateVec out;
  std::stringstream in(s.value);
  std::string item;
  int i = 0;
  while (std::getline(in, item, ',')) {
    if (i >= kStateDim) {
      fail(s, "expected 4 comma-separated numbers");
    }
    out[i++] = to_double(Setting{s.key, trim(item), s.origin});
  }
  if (i != kStateDim) {
    fail(s, "expected 4 comma-separated numbers");
  }
  return out;
}

double in_range(const Setting& s, double v, double lo, double hi, bool lo_open, bool hi_open) {
  const bool below = lo_open ? v <= lo : v < lo;
  const bool above = hi_open ? v >= hi : v > hi;
  if (below || above) {
    std::ostringstream msg;
    msg << "value " << s.value << " outside " << (lo_open ? "(" : "[") << lo << ", " << hi
        << (hi_open ? ")" : "]");
    fail(s, msg.str());
  }
  return v;
}

double positive(const Setting& s) {
  const double v = to_double(s);
  if (!(v > 0.0)) {
    fail(s, "must be > 0");
  }
  return v;
}

void apply(RunConfig& cfg, const Setting& s) {
  ScenarioSpec& sc = cfg.scenario;
  const bool bearings = sc.kind == ScenarioKind::BearingsOnly;
  if (bearings && linear_only_keys().count(s.key)) {
    fail(s, "only valid for the linear scenario");
  }
  if (!bearings && bearings_only_keys().count(s.key)) {
    fail(s, "only valid for the bearings scenario");
  }
  const std::string& k = s.key;
  if (k == "scenario") {
    return;  // handled before the other keys
  } else if (k == "pd") {
    sc.params.pd = in_range(s, to_double(s), 0.0, 1.0, true, true);
  } else if (k == "r") {
    sc.params.r = in_range(s, to_double(s), 0.0, 1.0, false, false);
  } else if (k == "b") {
    sc.params.b = in_range(s, to_double(s), 0.0, 1.0, false, false);
  } else if (k == "scans") {
    const auto v = to_int(s);
    if (v < 1 || v > kScanCap) {
      fail(s, "must be in [1, " + std::to_string(kScanCap) + "]");
    }
    sc.scans = static_cast<int>(v);
  } else if (k == "e_scale") {
    cfg.e_scale = positive(s);
  } else if (k == "prune_eps") {
    cfg.prune_eps = in_range(s, to_double(s), 0.0, kPruneEpsMax, false, false);
  } else if (k == "seed") {
    const auto v = to_int(s);
    if (v < 0) {
      fail(s, "must be >= 0");
    }
    cfg.seed = static_cast<std::uint64_t>(v);
  } else if (k == "runs") {
    const auto v = to_int(s);
    if (v < 1) {
      fail(s, "must be >= 1");
    }
    cfg.runs = static_cast<std::size_t>(v);
  } else if (k == "out") {
    cfg.out = s.value;
  } else if (k == "t_step") {
    sc.t_step = positive(s);
  } else if (k == "q") {
    const double v = to_double(s);
    if (v < 0.0) {
      fail(s, "must be >= 0");
    }
    sc.q = v;
  } else if (k == "sigma_x") {
    const double v = positive(s);
    sc.sensor_cov(0, 0) = v * v;
  } else if (k == "sigma_y") {
    const double v = positive(s);
    sc.sensor_cov(1, 1) = v * v;
  } else if (k == "sigma_z_deg") {
    const double v = positive(s) * kDeg;
    sc.sensor_cov(0, 0) = v * v;
  } else if (k == "omega_deg") {
    sc.omega = to_double(s) * kDeg;
  } else if (k == "c_r") {
    sc.c_r = positive(s);
  } else if (k == "c_v") {
    sc.c_v = positive(s);
  } else if (k == "target") {
    sc.initial_target = to_state(s);
  } else if (k == "ownship") {
    sc.initial_ownship = to_state(s);
  } else if (k == "particles") {
    const auto v = to_int(s);
    if (v < 10) {
      fail(s, "must be >= 10");
    }
    cfg.filter.particles = static_cast<std::size_t>(v);
  } else if (k == "threshold") {
    cfg.filter.threshold = in_range(s, to_double(s), 0.0, 1.0, false, false);
  } else {
    fail(s, "unknown key");
  }
}

bool known_key(const std::string& key) {
  const auto& keys = config_keys();
  return std::any_of(keys.begin(), keys.end(), [&](const KeyDoc& d) { return key == d.key; });
}

}  // namespace

const char* to_string(Mode m) {
  switch (m) {
    case Mode::RfsBound:
      return "rfs";
    case Mode::EnumPcrlb:
      return "enum";
    case Mode::Compare:
      return "compare";
    case Mode::MonteCarlo:
      return "mc";
  }
  return "?";
}

const std::vector<KeyDoc>& config_keys() {
  static const std::vector<KeyDoc> keys{
      {"scenario", "linear | bearings (selects the defaults the other keys modify)"},
      {"pd", "detection probability, in (0, 1)"},
      {"r", "maintenance probability, in [0, 1]"},
      {"b", "prior existence probability, in [0, 1]"},
      {"scans", "number of scans, 1..24"},
      {"e_scale", "factor on the cardinality error vectors [c_r, c_v, c_r, c_v]"},
      {"prune_eps", "drop patterns with probability below this, in [0, 1e-3]"},
      {"seed", "Monte Carlo seed"},
      {"runs", "Monte Carlo runs"},
      {"out", "output CSV path (a directory with --figure)"},
      {"t_step", "scan interval, s"},
      {"q", "process noise intensity (0 selects the noiseless recursion)"},
      {"sigma_x", "linear: x position noise std, m"},
      {"sigma_y", "linear: y position noise std, m"},
      {"sigma_z_deg", "bearings: bearing noise std, degrees"},
      {"omega_deg", "bearings: ownship turn rate, degrees/s"},
      {"c_r", "prior position std, m"},
      {"c_v", "prior velocity std, m/s"},
      {"target", "initial target state x,vx,y,vy"},
      {"ownship", "bearings: initial ownship state x,vx,y,vy"},
      {"particles", "Monte Carlo filter particle count"},
      {"threshold", "Monte Carlo existence threshold for reporting an estimate"},
  };
  return keys;
}

std::vector<Setting> parse_config_text(const std::string& text, const std::string& origin) {
  std::vector<Setting> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = origin + ":" + std::to_string(number);
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + where + ": expected 'key = value'");
    }
    Setting s{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), where};
    if (!known_key(s.key)) {
      throw ConfigError("key '" + s.key + "' at " + where + ": unknown key");
    }
    if (s.value.empty()) {
      throw ConfigError("key '" + s.key + "' at " + where + ": missing value");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Setting> parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file '" + path + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path);
}

RunConfig resolve_config(Mode mode, const std::vector<Setting>& settings) {
  RunConfig cfg;
  cfg.mode = mode;
  const Setting* scenario = nullptr;
  for (const Setting& s : settings) {
    if (s.key == "scenario") {
      scenario = &s;
    }
  }
  if (scenario != nullptr) {
    if (scenario->value == "linear") {
      cfg.scenario = linear_default();
    } else if (scenario->value == "bearings") {
      cfg.scenario = bearings_default();
    } else {
      fail(*scenario, "expected 'linear' or 'bearings', got '" + scenario->value + "'");
    }
  }
  for (const Setting& s : settings) {
    if (!known_key(s.key)) {
      fail(s, "unknown key");
    }
    apply(cfg, s);
    cfg.applied.push_back(s);
  }
  cfg.scenario.set_cardinality_errors(cfg.e_scale);
  try {
    cfg.scenario.validate();
  } catch (const InvalidParams& e) {
    throw ConfigError(std::string("scenario is inconsistent: ") + e.what());
  }
  return cfg;
}

}  // namespace rfsbound
