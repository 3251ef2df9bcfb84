#include <CLI11.hpp>

#include <iostream>

#include "odl/error.hpp"
#include "odl_cli/commands.hpp"
#include "odl_cli/config.hpp"
#include "odl_cli/plot.hpp"

using namespace odl::cli;

int main(int argc, char** argv) {
  CLI::App app{"On-device fine-tuning experiments for a pose-estimation CNN"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment config (defaults apply when omitted)");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--jobs", jobs, "worker threads for independent runs")->check(CLI::PositiveNumber);
  }

  PlotSpec plot;
  std::string csv, svg;
  auto* plot_cmd = app.add_subcommand("plot", "re-render a summary CSV as SVG");
  plot_cmd->add_option("--csv", csv)->required();
  plot_cmd->add_option("--svg", svg)->required();
  plot_cmd->add_option("--title", plot.title);
  plot_cmd->add_option("--x-label", plot.x_label);
  plot_cmd->add_option("--y-label", plot.y_label);
  plot_cmd->add_flag("--log-x", plot.log_x);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigFailure;
  }

  try {
    if (plot_cmd->parsed()) {
      render_svg_file(csv, svg, plot);
      return kOk;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    Config config = config_path.empty() ? parse_config("{}", odl_environment()) : load_config(config_path);
    if (seed) {
      config.seed = *seed;
      config.train.seed = *seed;
      config.resolved["seed"] = *seed;
    }
    if (jobs) config.jobs = *jobs;
    run_command(command, config, out_dir, std::cerr);
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}
