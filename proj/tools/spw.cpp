// Command-line front end. Every subcommand takes the same experiment flags;
// --config loads a key = value file first and explicit flags override it.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "spw/error.hpp"
#include "spw/harness.hpp"

namespace {

/// Finds --config before CLI11 runs so that the file supplies the defaults.
std::string find_config_path(int argc, char** argv) {
  for (int k = 1; k < argc; ++k) {
    const std::string_view arg = argv[k];
    if (arg == "--config" && k + 1 < argc) return argv[k + 1];
    if (arg.starts_with("--config=")) return std::string(arg.substr(9));
  }
  return {};
}

void add_experiment_flags(CLI::App& app, spw::ExperimentConfig& c, std::string& config_path,
                          double& alpha_from, double& alpha_to, double& alpha_step) {
  app.add_option("--config", config_path, "key = value experiment file");
  app.add_option("--n", c.n_vars, "number of variables");
  app.add_option("--alpha", c.alpha, "clause density M/N");
  app.add_option("--alphas", c.alphas, "explicit scan grid")->delimiter(',');
  app.add_option("--alpha-from", alpha_from, "scan grid start");
  app.add_option("--alpha-to", alpha_to, "scan grid end (inclusive)");
  app.add_option("--step", alpha_step, "scan grid step");
  app.add_option("--arity,-k", c.arity, "literals per clause");
  app.add_option("--L", c.L, "population size");
  app.add_option("--epsilon", c.epsilon, "convergence threshold");
  app.add_option("--max-sweeps", c.max_sweeps, "sweep budget");
  app.add_option("--damping", c.damping, "damping in [0, 1)");
  app.add_option("--schedule", c.schedule, "random-sequential | synchronous");
  app.add_option("--bp-mode", c.bp_mode, "uniform | paper");
  app.add_option("--root", c.root, "root variable for unroll and probe");
  app.add_option("--k-max", c.k_max, "unrolling depth");
  app.add_option("--boundaries", c.n_boundaries, "random boundaries per depth");
  app.add_option("--t-max", c.t_max, "generations");
  app.add_option("--t-burn", c.t_burn, "generations discarded before the decay fit");
  app.add_option("--sigma-samples", c.sigma_samples, "Monte Carlo samples for the complexity");
  app.add_option("--seed,--seeds", c.seeds, "seed, or comma separated seeds")->delimiter(',');
  app.add_option("--input,-i", c.input, "DIMACS file instead of a generated instance");
  app.add_option("--out,-o", c.output_dir, "output directory (default $SPW_OUTPUT_DIR or spw-out)");
}

}  // namespace

int main(int argc, char** argv) {
  spw::ExperimentConfig config;
  const auto config_path = find_config_path(argc, argv);
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot read " << config_path << '\n';
      return static_cast<int>(spw::ExitCode::io_error);
    }
    std::stringstream text;
    text << in.rdbuf();
    try {
      config = spw::parse_key_value(text.str());
    } catch (const spw::InvalidParameters& e) {
      std::cerr << "error: " << e.what() << '\n';
      return static_cast<int>(spw::ExitCode::invalid_parameters);
    }
  }

  CLI::App app{"Survey propagation workbench for random K-SAT"};
  app.set_version_flag("--version", std::string(SPW_VERSION));
  app.require_subcommand(0, 1);
  std::string ignored_config;
  double alpha_from = 0.0, alpha_to = 0.0, alpha_step = 0.0;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"gen", "generate a random instance"},
      {"bp", "belief propagation on an instance"},
      {"sp", "survey propagation on an instance"},
      {"unroll", "unroll the tree rooted at a variable"},
      {"probe", "boundary dependence of the root survey on the unrolled tree"},
      {"popdyn", "population dynamics for the survey distribution"},
      {"lyapunov", "decay rate of the distance between coupled replicas"},
      {"scan", "lambda, complexity and frozen fraction over an alpha grid"}};
  for (const auto& [name, help] : commands) {
    add_experiment_flags(*app.add_subcommand(name, help), config, ignored_config, alpha_from,
                         alpha_to, alpha_step);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(spw::ExitCode::invalid_parameters);
  }
  if (!app.get_subcommands().empty()) config.subcommand = app.get_subcommands().front()->get_name();
  if (config.subcommand.empty()) {
    std::cerr << app.help();
    return static_cast<int>(spw::ExitCode::invalid_parameters);
  }
  if (alpha_step > 0.0) {
    try {
      config.alphas = spw::alpha_grid(alpha_from, alpha_to, alpha_step);
    } catch (const spw::InvalidParameters& e) {
      std::cerr << "error: " << e.what() << '\n';
      return static_cast<int>(spw::ExitCode::invalid_parameters);
    }
  }

  const auto manifest = spw::run(config, std::cerr);
  return static_cast<int>(manifest.exit_code);
}
