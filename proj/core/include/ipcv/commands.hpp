#pragma once

#include <string_view>
#include <vector>

#include "ipcv/report.hpp"
#include "ipcv/run_spec.hpp"

namespace ipcv {

// Each command validates the spec, runs spec.trials independent trials in
// trial order and returns a report. Trial t builds its encoder and input
// from seeds derived from (spec.seed, t).

Report cmd_forward(const RunSpec& spec);
Report cmd_compress(const RunSpec& spec);
Report cmd_bounds(const RunSpec& spec);
Report cmd_stats(const RunSpec& spec);
Report cmd_flops(const RunSpec& spec);
Report cmd_ablate(const RunSpec& spec);
Report cmd_sweep(const RunSpec& spec, SweepAxis axis, const std::vector<double>& values);

/// Dispatch by subcommand name; sweep uses spec.sweep_axis / sweep_values.
Report run_command(std::string_view name, const RunSpec& spec);

const std::vector<std::string_view>& command_names();

/// The report in spec.format.
std::string render(const Report& report, OutputFormat format);

}  // namespace ipcv
