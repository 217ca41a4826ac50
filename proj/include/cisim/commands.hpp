#pragma once

#include <string>

#include "cisim/config.hpp"
#include "cisim/error.hpp"

namespace cisim {

// Exit codes of the subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNoConvergence = 2;
inline constexpr int kExitFailure = 3;

// Each writes its CSVs and manifest.json into cfg.out_dir (created if
// missing) and returns an exit code; errors are reported on stderr.
int cmd_eigs(const RunConfig& cfg);
int cmd_localization(const RunConfig& cfg);
int cmd_curve(const RunConfig& cfg);
int cmd_phase_diagram(const RunConfig& cfg);
int cmd_dynamics(const RunConfig& cfg);

// Maps an error code to the exit code contract above.
int exit_code_for(ErrorCode code);

}  // namespace cisim
