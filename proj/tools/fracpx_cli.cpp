// fracpx <mode> --config <path> [--out <dir>] [--seed <int>]
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fracpx/config.hpp"
#include "fracpx/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fractional p(x,.)-Laplacian Dirichlet solver"};
  std::string mode;
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("mode", mode, "validate | poisson | semilinear | decompose | verify")
      ->required()
      ->check(CLI::IsMember({"validate", "poisson", "semilinear", "decompose", "verify"}));
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  app.add_option("--seed", seed, "random seed (overrides seed)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fracpx::exit_config;
  }

  try {
    auto cfg = fracpx::load_config(config_path, fracpx::parse_mode(mode));
    if (out_dir) cfg.out_dir = *out_dir;
    if (seed) cfg.seed = *seed;
    const auto outcome = fracpx::run(cfg);
    std::cout << outcome.report;
    return outcome.exit_code;
  } catch (const fracpx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case fracpx::Errc::not_converged:
      case fracpx::Errc::non_finite:
        return fracpx::exit_not_converged;
      default:
        return fracpx::exit_config;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fracpx::exit_config;
  }
}
