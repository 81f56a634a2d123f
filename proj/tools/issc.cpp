#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "issc/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Secure semantic ISAC beamforming simulator"};
  std::string mode;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool emit_trace = false;
  app.add_option("mode", mode, "run | sweep | sensing-ref | music | bench")->required();
  app.add_option("--config", config_path, "JSON experiment file")->required();
  app.add_option("--seed", seed, "Seed for channel gains, randomization and echoes")->required();
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_flag("--emit-trace", emit_trace, "Write per-iteration traces");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  bool single_run = true;
  try {
    issc::ExperimentConfig cfg = issc::load_config(config_path);
    cfg.mode = issc::parse_mode(mode);
    cfg.seed = seed;
    cfg.output_dir = out_dir;
    cfg.emit_trace = cfg.emit_trace || emit_trace;
    single_run = cfg.mode != issc::Mode::sweep;
    issc::execute(cfg);
  } catch (const issc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const issc::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return single_run ? 3 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
