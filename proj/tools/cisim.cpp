// cisim: conical-intersection localization and dynamics runs from a config file.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cisim/commands.hpp"
#include "cisim/config.hpp"
#include "cisim/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cisim: vibronic localization and population dynamics near a conical intersection"};
  app.require_subcommand(1);

  struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
  };
  Common common;

  using Handler = int (*)(const cisim::RunConfig&);
  const std::vector<std::tuple<std::string, std::string, Handler>> subs = {
      {"eigs", "lowest eigenpairs per Hamiltonian kind (and correlation diagrams)", cisim::cmd_eigs},
      {"localization", "donor-region weight P of eigenstates and degenerate doublets", cisim::cmd_localization},
      {"curve", "delocalization curve 1-P(delta) and its critical deltas", cisim::cmd_curve},
      {"phase-diagram", "critical deltas over a list of couplings gamma", cisim::cmd_phase_diagram},
      {"dynamics", "donor population P(t) from a thermal donor ensemble", cisim::cmd_dynamics},
  };
  Handler chosen = nullptr;
  for (const auto& [name, help, handler] : subs) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", common.config, "key=value config file with [sections]");
    sub->add_option("--set", common.sets, "override, e.g. --set model.delta=1 (repeatable)");
    sub->add_option("--out", common.out, "output directory (overrides output.dir)");
    sub->callback([&chosen, h = handler] { chosen = h; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cisim::kExitOk : cisim::kExitConfig;
  }

  cisim::RunConfig cfg;
  try {
    cfg = common.config.empty() ? cisim::parse_config_text("", common.sets, "<defaults>")
                                : cisim::parse_config_file(common.config, common.sets);
  } catch (const cisim::Error& e) {
    std::cerr << "cisim: " << cisim::to_string(e.code()) << ": " << e.what() << "\n";
    return cisim::kExitConfig;
  }
  if (!common.out.empty()) cfg.out_dir = common.out;
  return chosen(cfg);
}
