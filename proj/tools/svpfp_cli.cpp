#include <CLI11.hpp>
#include <iostream>

#include "svpfp/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"svpfp: stochastic Vlasov-Poisson-Fokker-Planck lab"};
  app.require_subcommand(1);
  svpfp::CommandOptions opts;
  std::string output_dir;
  std::uint64_t seed = 0;

  for (const auto& name : svpfp::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "JSON config file")->required();
    sub->add_option("--override", opts.overrides, "section.key=value (repeatable)");
    sub->add_option("--output-dir", output_dir, "output directory");
    sub->add_option("--seed", seed, "noise seed");
    sub->add_option("--threads", opts.threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : svpfp::kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--output-dir")) opts.output_dir = output_dir;
  if (chosen->count("--seed")) opts.seed = seed;
  return svpfp::run_command(chosen->get_name(), opts, std::cout, std::cerr);
}
