// rfs-bound: error bounds for a single target observed through a Bernoulli
// detection process, with an enumeration comparator and a Monte Carlo check.

#include "rfsbound/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace {

struct Flags {
  std::string config;
  std::map<std::string, std::string> values;
  std::optional<int> figure;
};

// Flag name -> config key.
const std::map<std::string, std::string>& flag_keys() {
  static const std::map<std::string, std::string> keys{
      {"--scenario", "scenario"}, {"--pd", "pd"},           {"--r", "r"},
      {"--b", "b"},               {"--scans", "scans"},     {"--e-scale", "e_scale"},
      {"--prune-eps", "prune_eps"}, {"--seed", "seed"},     {"--runs", "runs"},
      {"--out", "out"},
  };
  return keys;
}

void add_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "key = value scenario file; flags override it");
  for (const auto& [flag, key] : flag_keys()) {
    std::string help = "config key '" + key + "'";
    for (const auto& doc : rfsbound::config_keys()) {
      if (key == doc.key) {
        help = doc.help;
      }
    }
    cmd->add_option(flag, flags.values[flag], help);
  }
  cmd->add_option("--figure", flags.figure, "emit the parameter grid of figure 1, 2, 3, 5 or 6 into --out")
      ->check(CLI::IsMember({1, 2, 3, 5, 6}));
}

std::string key_footer() {
  std::string text = "Config file keys (flat 'key = value', '#' comments):\n";
  for (const auto& doc : rfsbound::config_keys()) {
    text += "  " + std::string(doc.key) + std::string(14 - std::min<std::size_t>(13, std::string(doc.key).size()), ' ') +
            doc.help + "\n";
  }
  text += "Environment: RFS_BOUND_THREADS caps the worker thread count.\n";
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Error bounds for single-target tracking with missed detections"};
  app.footer(key_footer());
  app.set_version_flag("--version", rfsbound::version_string());
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    rfsbound::Mode mode;
  };
  const Sub subs[] = {
      {"rfs", "recursive bound for the Bernoulli state and observation model", rfsbound::Mode::RfsBound},
      {"enum", "enumeration PCRLB over detection patterns", rfsbound::Mode::EnumPcrlb},
      {"compare", "both bounds side by side", rfsbound::Mode::Compare},
      {"mc", "bound plus Monte Carlo MSE of a Bernoulli particle filter", rfsbound::Mode::MonteCarlo},
  };
  Flags flags;
  std::map<CLI::App*, rfsbound::Mode> modes;
  for (const Sub& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_flags(cmd, flags);
    modes[cmd] = s.mode;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);
    }
    std::cerr << "ConfigError: " << e.what() << "\n";
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  return rfsbound::guarded(
      [&] {
        std::vector<rfsbound::Setting> settings;
        if (!flags.config.empty()) {
          settings = rfsbound::parse_config(flags.config);
        }
        for (const auto& [flag, key] : flag_keys()) {
          if (chosen->count(flag) > 0) {
            settings.push_back({key, flags.values[flag], flag});
          }
        }
        rfsbound::RunConfig cfg = rfsbound::resolve_config(modes.at(chosen), settings);
        cfg.figure = flags.figure;
        rfsbound::run(cfg, std::cout);
      },
      std::cerr);
}
