#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "perc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Percolation and SLE experiments on the triangular lattice"};
  app.require_subcommand(1);
  std::string config_path;
  bool assert_gates = false;
  app.add_option("-c,--config", config_path, "key = value configuration file");
  app.add_flag("--assert", assert_gates, "exit nonzero when a statistical gate fails");

  std::map<std::string, std::string> flags;
  for (const auto& name : perc::command_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    for (const auto& k : perc::config_schema()) {
      if (std::string(k.key) == "command") continue;
      sub->add_option("--" + std::string(k.key), flags[k.key], k.help);
    }
    sub->add_option("-c,--config", config_path, "key = value configuration file");
    sub->add_flag("--assert", assert_gates, "exit nonzero when a statistical gate fails");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    perc::ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::ifstream f(config_path, std::ios::binary);
      if (!f) throw std::runtime_error("cannot read " + config_path);
      std::stringstream buf;
      buf << f.rdbuf();
      cfg = perc::parse_config(buf.str(), config_path);
    }
    const std::string command = app.get_subcommands().front()->get_name();
    if (cfg.has("command") && cfg.command() != command)
      throw perc::ConfigError("config file is for '" + cfg.command() + "', not '" + command + "'");
    cfg.set("command", command);
    auto* sub = app.get_subcommands().front();
    for (const auto& [key, value] : flags)
      if (sub->count("--" + key) > 0) cfg.set(key, value);
    perc::apply_environment(cfg);

    perc::RunOptions opt;
    opt.assert_gates = assert_gates;
    auto result = perc::run_experiment(cfg, opt);
    for (const auto& a : result.artifacts) std::cerr << "wrote " << a << "\n";
    return result.status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
