// ipcv: experiment harness for the token-compression pipeline.
//
//   ipcv <command> [--spec FILE] [--out FILE] [--format csv|json] [--seed N]
//   ipcv sweep --axis retain --values 1.0,0.5,0.35,0.2
//   ipcv default-spec
//
// Exit codes: 0 success, 1 usage, 2 configuration, 3 internal error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ipcv/commands.hpp"
#include "ipcv/run_spec.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

struct Options {
  std::string spec_path;
  std::string out_path;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::string axis;
  std::string values;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--spec", o.spec_path, "Run spec file (key = value)");
  cmd->add_option("--out", o.out_path, "Report path (default: stdout or output.path)");
  cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", o.seed, "Master seed override");
}

int run(const std::string& command, const Options& o) {
  ipcv::RunSpec spec = o.spec_path.empty() ? ipcv::RunSpec{} : ipcv::load_run_spec(o.spec_path);
  if (o.seed) spec.seed = *o.seed;
  if (!o.format.empty()) spec.format = ipcv::parse_output_format(o.format);
  if (!o.out_path.empty()) spec.output_path = o.out_path;
  if (!o.axis.empty()) spec.sweep_axis = ipcv::parse_sweep_axis(o.axis);
  if (!o.values.empty()) spec.sweep_values = ipcv::parse_run_spec("sweep.values = " + o.values).sweep_values;

  const ipcv::Report report = ipcv::run_command(command, spec);
  const std::string body = ipcv::render(report, spec.format);
  if (spec.output_path.empty()) {
    std::cout << body;
  } else {
    std::ofstream out(spec.output_path, std::ios::binary);
    if (!out) throw ipcv::UsageError("cannot write '" + spec.output_path + "'");
    out << body;
  }
  return 0;
}

const char* describe(std::string_view name) {
  if (name == "forward") return "Vanilla forward pass statistics per trial";
  if (name == "compress") return "Run the compression pipeline and compare with vanilla";
  if (name == "bounds") return "Reconstruction error against the empirical bounds";
  if (name == "stats") return "Neighbor vs random update similarity of pruned tokens";
  if (name == "flops") return "Closed-form FLOPs of vanilla, naive and compressed forwards";
  if (name == "ablate") return "Pipeline variants with components switched off";
  if (name == "sweep") return "Error and FLOPs across values of one configuration axis";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Token-compression laboratory: prune, reconstruct, measure."};
  app.require_subcommand(1);
  Options opts;
  std::string chosen;

  for (std::string_view name : ipcv::command_names()) {
    CLI::App* cmd = app.add_subcommand(std::string(name), describe(name));
    add_common(cmd, opts);
    if (name == "sweep") {
      cmd->add_option("--axis", opts.axis, "l_p, delta_l_max, k or retain");
      cmd->add_option("--values", opts.values, "Comma-separated values");
    }
    cmd->callback([&chosen, name] { chosen = std::string(name); });
  }
  app.add_subcommand("default-spec", "Print the default run spec")->callback([&chosen] {
    chosen = "default-spec";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (chosen == "default-spec") {
      std::cout << ipcv::RunSpec{}.canonical();
      return 0;
    }
    return run(chosen, opts);
  } catch (const ipcv::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ipcv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ipcv::ContractViolation& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
