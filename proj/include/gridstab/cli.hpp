#pragma once

#include <ostream>
#include <string>

#include "gridstab/scenario_io.hpp"

namespace gridstab {

/// Exit codes shared by every subcommand: 0 success, 1 input error,
/// 2 numerical non-convergence.
enum ExitCode { kOk = 0, kInputError = 1, kNumericalError = 2 };

/// Parse and validate a case file; print bus/branch counts, radiality
/// verdict and total load.
int cmd_validate(const std::string& case_path, std::ostream& out, std::ostream& err);

/// Static stability analysis: per-bus margins and network verdict as JSON.
/// v_star_mode is one of "flat", "loadflow", "fixedpoint".
int cmd_analyze(const std::string& case_path, const std::string& inverters_path,
                const std::string& v_star_mode, std::ostream& out, std::ostream& err);

/// Run a scenario and emit <out_dir>/timeseries.csv + <out_dir>/summary.json.
int cmd_simulate(const std::string& scenario_path, const RunOverrides& overrides,
                 const std::string& out_dir, std::ostream& out, std::ostream& err);

}  // namespace gridstab
