#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qrepeater/cli.hpp"

namespace {

void apply_set_overrides(qrepeater::cli::Settings& settings,
                         const std::vector<std::string>& assignments) {
  for (const std::string& kv : assignments) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size())
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    qrepeater::cli::apply_setting(settings, kv.substr(0, eq), kv.substr(eq + 1));
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace qrepeater::cli;

  CLI::App app{"rate and fidelity calculator for a partial-readout atomic-ensemble "
               "quantum repeater"};
  app.require_subcommand(1);

  std::string config_path;
  std::string format_str = "human";
  std::string out_path;
  std::vector<std::string> set_overrides;
  app.add_option("--config", config_path, "configuration file (key = value lines)");
  app.add_option("--format", format_str, "output format")
      ->check(CLI::IsMember({"human", "csv"}));
  app.add_option("--out", out_path, "write output to this file instead of stdout");
  app.add_option("--set", set_overrides, "override one configuration key, key=value")
      ->take_all();

  CLI::App* rates = app.add_subcommand("rates", "closed-form rates at one working point");

  CLI::App* sweep =
      app.add_subcommand("sweep", "compare direct transmission and the repeater "
                                  "over a distance range");
  double lmin_km = 0.0, lmax_km = 0.0, step_km = 100.0;
  sweep->add_option("--lmin", lmin_km, "smallest distance, km")->required();
  sweep->add_option("--lmax", lmax_km, "largest distance, km")->required();
  sweep->add_option("--step", step_km, "distance step, km")->capture_default_str();

  CLI::App* verify = app.add_subcommand(
      "verify", "check every closed form against brute-force circuit simulation");
  std::string grid_path;
  verify->add_option("--grid", grid_path, "file of 'alpha2 eta' points");
  bool corrupt = false;
  verify->add_flag("--corrupt", corrupt)->group("");

  CLI::App* simulate =
      app.add_subcommand("simulate", "Monte Carlo of the repeater chain");
  std::uint64_t trials_opt = 0;
  std::uint64_t seed_opt = 0;
  int workers = 1;
  simulate->add_option("--trials", trials_opt, "number of independent trials");
  simulate->add_option("--seed", seed_opt, "RNG seed");
  simulate->add_option("--workers", workers, "worker threads")
      ->capture_default_str()
      ->check(CLI::Range(1, 4096));

  CLI::App* optimize =
      app.add_subcommand("optimize", "pick alpha2 minimizing the distribution time");
  double f_min = 0.0;
  optimize->add_option("--fmin", f_min, "smallest acceptable fidelity")
      ->capture_default_str();

  for (CLI::App* sub : {rates, sweep, verify, simulate, optimize}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    Settings settings;
    if (!config_path.empty()) load_config_file(settings, config_path);
    apply_set_overrides(settings, set_overrides);
    if (simulate->count("--trials") > 0) {
      if (trials_opt == 0) throw std::invalid_argument("trials must be positive");
      settings.trials = trials_opt;
    }
    if (simulate->count("--seed") > 0) settings.seed = seed_opt;
    const Format format = parse_format(format_str);

    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
      file_out.open(out_path, std::ios::binary);
      if (!file_out) throw std::invalid_argument("cannot open output file: " + out_path);
      out = &file_out;
    }

    int code = kExitOk;
    if (rates->parsed()) {
      code = cmd_rates(settings, format, *out);
    } else if (sweep->parsed()) {
      code = cmd_sweep(settings, lmin_km, lmax_km, step_km, format, *out);
    } else if (verify->parsed()) {
      const auto grid = grid_path.empty() ? default_grid() : load_grid_file(grid_path);
      code = cmd_verify(settings, grid, corrupt, format, *out);
    } else if (simulate->parsed()) {
      code = cmd_simulate(settings, workers, format, *out);
    } else if (optimize->parsed()) {
      code = cmd_optimize(settings, f_min, format, *out);
    }
    out->flush();
    if (out == &file_out && !file_out) throw std::runtime_error("writing output failed");
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
