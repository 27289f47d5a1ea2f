#include "rfsbound/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#ifndef RFSBOUND_VERSION
#define RFSBOUND_VERSION "unknown"
#endif

namespace rfsbound {

namespace {

struct FigurePoint {
  std::string label;
  std::vector<Setting> settings;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Setting grid(const std::string& key, const std::string& value, int figure) {
  return {key, value, "--figure " + std::to_string(figure)};
}

std::vector<FigurePoint> figure_grid(int figure) {
  std::vector<FigurePoint> out;
  auto vary_r = [&](const std::string& scenario, const std::string& pd, const std::string& b,
                    const std::string& e_scale) {
    for (const char* r : {"1", "0.95", "0.9"}) {
      out.push_back({"r" + std::string(r),
                     {grid("scenario", scenario, figure), grid("pd", pd, figure), grid("b", b, figure),
                      grid("e_scale", e_scale, figure), grid("r", r, figure)}});
    }
  };
  switch (figure) {
    case 1:
      vary_r("linear", "0.8", "1", "1");
      break;
    case 2:
      for (const char* pd : {"0.7", "0.9"}) {
        out.push_back({"pd" + std::string(pd),
                       {grid("scenario", "linear", figure), grid("pd", pd, figure), grid("b", "1", figure),
                        grid("e_scale", "1", figure), grid("r", "0.9", figure)}});
      }
      break;
    case 3:
      vary_r("linear", "0.8", "1", "2");
      break;
    case 5:
      vary_r("bearings", "0.9", "1", "1");
      break;
    case 6:
      vary_r("bearings", "0.9", "0.1", "1");
      break;
    default:
      throw ConfigError("--figure must be one of 1, 2, 3, 5, 6");
  }
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  f << text;
  f.flush();
  if (!f) {
    throw IoError("write to '" + path + "' failed");
  }
}

struct SingleResult {
  std::string csv;
  double dropped_mass = 0.0;
  std::size_t psd_failures = 0;
  std::size_t degenerate_runs = 0;
};

SingleResult run_single(const RunConfig& cfg) {
  PipelineOptions options;
  options.prune_eps = cfg.prune_eps;
  const int k = cfg.k_max();
  SingleResult res;
  switch (cfg.mode) {
    case Mode::RfsBound: {
      const BoundSeries s = rfs_bound_series(cfg.scenario, k, options);
      res.csv = render_csv(s, nullptr, nullptr);
      res.dropped_mass = s.dropped_mass();
      res.psd_failures = s.psd_failures();
      break;
    }
    case Mode::EnumPcrlb: {
      const BoundSeries s = enum_pcrlb_series(cfg.scenario, k, options);
      res.csv = render_csv(s, nullptr, nullptr);
      res.dropped_mass = s.dropped_mass();
      res.psd_failures = s.psd_failures();
      break;
    }
    case Mode::Compare: {
      const BoundSeries s = rfs_bound_series(cfg.scenario, k, options);
      const BoundSeries e = enum_pcrlb_series(cfg.scenario, k, options);
      res.csv = render_csv(s, &e, nullptr);
      res.dropped_mass = s.dropped_mass();
      res.psd_failures = s.psd_failures() + e.psd_failures();
      break;
    }
    case Mode::MonteCarlo: {
      const BoundSeries s = rfs_bound_series(cfg.scenario, k, options);
      const MonteCarloSeries mc = empirical_mse(cfg.scenario, k, cfg.runs, cfg.seed, cfg.filter);
      res.csv = render_csv(s, nullptr, &mc);
      res.dropped_mass = s.dropped_mass();
      res.psd_failures = s.psd_failures();
      res.degenerate_runs = mc.degenerate_runs;
      break;
    }
  }
  return res;
}

nlohmann::ordered_json describe(const RunConfig& cfg) {
  const ScenarioSpec& sc = cfg.scenario;
  nlohmann::ordered_json j;
  j["mode"] = to_string(cfg.mode);
  j["scenario"] = to_string(sc.kind);
  j["pd"] = sc.params.pd;
  j["r"] = sc.params.r;
  j["b"] = sc.params.b;
  j["scans"] = sc.scans;
  j["e_scale"] = cfg.e_scale;
  j["e0"] = std::vector<double>(sc.params.e0.data(), sc.params.e0.data() + kStateDim);
  j["e1"] = std::vector<double>(sc.params.e1.data(), sc.params.e1.data() + kStateDim);
  j["prune_eps"] = cfg.prune_eps;
  j["t_step"] = sc.t_step;
  j["q"] = sc.q;
  std::vector<std::vector<double>> r_rows;
  for (Eigen::Index i = 0; i < sc.sensor_cov.rows(); ++i) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < sc.sensor_cov.cols(); ++c) {
      row.push_back(sc.sensor_cov(i, c));
    }
    r_rows.push_back(row);
  }
  j["sensor_cov"] = r_rows;
  j["c_r"] = sc.c_r;
  j["c_v"] = sc.c_v;
  j["target"] = std::vector<double>(sc.initial_target.data(), sc.initial_target.data() + kStateDim);
  if (sc.initial_ownship) {
    j["ownship"] = std::vector<double>(sc.initial_ownship->data(), sc.initial_ownship->data() + kStateDim);
  }
  if (sc.omega) {
    j["omega"] = *sc.omega;
  }
  if (cfg.mode == Mode::MonteCarlo) {
    j["seed"] = cfg.seed;
    j["runs"] = cfg.runs;
    j["particles"] = cfg.filter.particles;
    j["threshold"] = cfg.filter.threshold;
  }
  nlohmann::ordered_json applied = nlohmann::ordered_json::array();
  for (const Setting& s : cfg.applied) {
    applied.push_back({{"key", s.key}, {"value", s.value}, {"origin", s.origin}});
  }
  j["settings"] = applied;
  return j;
}

void write_manifest(const std::string& csv_path, const std::vector<std::pair<const RunConfig*, SingleResult>>& parts,
                    double wall) {
  nlohmann::ordered_json m;
  m["version"] = version_string();
  m["output"] = csv_path;
  m["wall_time_s"] = wall;
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& [cfg, res] : parts) {
    nlohmann::ordered_json r;
    r["config"] = describe(*cfg);
    r["dropped_probability_mass"] = res.dropped_mass;
    r["psd_failures"] = res.psd_failures;
    if (cfg->mode == Mode::MonteCarlo) {
      r["degenerate_runs"] = res.degenerate_runs;
    }
    runs.push_back(r);
  }
  m["runs"] = runs;
  write_file(csv_path + ".manifest.json", m.dump(2) + "\n");
}

}  // namespace

const char* version_string() { return RFSBOUND_VERSION; }

std::string render_csv(const BoundSeries& series, const BoundSeries* enum_series,
                       const MonteCarloSeries* mc) {
  std::ostringstream out;
  out << "scan,pr_mass_kept,rmse_pos_x,rmse_vel_x,rmse_pos_y,rmse_vel_y";
  if (enum_series != nullptr) {
    out << ",enum_rmse_pos_x,enum_rmse_vel_x,enum_rmse_pos_y,enum_rmse_vel_y";
  }
  if (mc != nullptr) {
    out << ",mc_rmse_pos_x,mc_rmse_vel_x,mc_rmse_pos_y,mc_rmse_vel_y,mc_trace,mc_trace_se";
  }
  out << "\n";
  for (std::size_t i = 0; i < series.per_scan.size(); ++i) {
    const ScanBound& s = series.per_scan[i];
    out << s.k << "," << num(s.mass_kept);
    for (int c = 0; c < kStateDim; ++c) {
      out << "," << num(s.rmse[c]);
    }
    if (enum_series != nullptr) {
      const ScanBound& e = enum_series->per_scan.at(i);
      for (int c = 0; c < kStateDim; ++c) {
        out << "," << num(e.rmse[c]);
      }
    }
    if (mc != nullptr) {
      const MonteCarloScan& m = mc->per_scan.at(i);
      for (int c = 0; c < kStateDim; ++c) {
        out << "," << num(m.rmse[c]);
      }
      out << "," << num(m.trace) << "," << num(m.trace_se);
    }
    out << "\n";
  }
  return out.str();
}

RunReport run(const RunConfig& config, std::ostream& stdout_sink) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  RunReport report;

  if (config.figure) {
    if (config.out.empty()) {
      throw ConfigError("--figure needs --out naming an output directory");
    }
    const std::vector<FigurePoint> points = figure_grid(*config.figure);
    std::error_code ec;
    std::filesystem::create_directories(config.out, ec);
    if (ec) {
      throw IoError("cannot create directory '" + config.out + "': " + ec.message());
    }
    std::set<std::string> fixed;
    for (const Setting& s : points.front().settings) {
      fixed.insert(s.key);
    }
    for (const FigurePoint& p : points) {
      std::vector<Setting> settings;
      for (const Setting& s : config.applied) {
        if (!fixed.count(s.key) && s.key != "out") {
          settings.push_back(s);
        }
      }
      settings.insert(settings.end(), p.settings.begin(), p.settings.end());
      RunConfig point = resolve_config(Mode::Compare, settings);
      const SingleResult res = run_single(point);
      const std::string path =
          (std::filesystem::path(config.out) / ("fig" + std::to_string(*config.figure) + "_" + p.label + ".csv"))
              .string();
      write_file(path, res.csv);
      write_manifest(path, {{&point, res}}, elapsed());
      report.files.push_back(path);
      report.dropped_mass = std::max(report.dropped_mass, res.dropped_mass);
      report.psd_failures += res.psd_failures;
    }
    report.wall_seconds = elapsed();
    return report;
  }

  const SingleResult res = run_single(config);
  report.dropped_mass = res.dropped_mass;
  report.psd_failures = res.psd_failures;
  report.degenerate_runs = res.degenerate_runs;
  if (config.out.empty()) {
    stdout_sink << res.csv;
    stdout_sink.flush();
  } else {
    write_file(config.out, res.csv);
    write_manifest(config.out, {{&config, res}}, elapsed());
    report.files.push_back(config.out);
  }
  report.wall_seconds = elapsed();
  return report;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr || dynamic_cast<const InvalidParams*>(&e) != nullptr) {
    return 2;
  }
  if (dynamic_cast<const CapExceeded*>(&e) != nullptr) {
    return 3;
  }
  if (dynamic_cast<const IoError*>(&e) != nullptr) {
    return 4;
  }
  return 1;
}

int guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n' || c == '\r') {
        c = ' ';
      }
    }
    if (msg.find(": ") == std::string::npos || msg.find(": ") > 24) {
      msg = "Error: " + msg;
    }
    err << msg << "\n";
    return exit_code_for(e);
  }
}

}  // namespace rfsbound
