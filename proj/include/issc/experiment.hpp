#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "issc/alternating_optimizer.hpp"
#include "issc/music_eval.hpp"
#include "issc/sensing_reference.hpp"

namespace issc {

inline constexpr const char* kVersion = "1.0.0";

/// Malformed or out-of-range configuration. The message starts with the
/// offending field path.
class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

enum class Mode { run, sweep, sensing_ref, music, bench };

Mode parse_mode(const std::string& name);
std::string mode_name(Mode mode);

/// Experiment description in user units: degrees and dBm. Empty gain lists
/// are drawn uniformly from gain_range with the seed (CU gains, then α, then
/// β); empty profiles fall back to the default BLEU profiles.
struct ExperimentConfig {
  Mode mode = Mode::run;
  std::uint64_t seed = 0;

  int n_antennas = 18;
  double spacing_ratio = 0.5;
  std::vector<double> cu_angles_deg{-30.0, 20.0};
  std::vector<double> target_angles_deg{-35.0, 5.0, 45.0};
  std::vector<double> cu_gains;
  std::vector<double> target_gains_alpha;
  std::vector<double> target_gains_beta;
  double gain_min = 0.001;
  double gain_max = 0.01;
  double sigma_c_dbm = -60.0;
  double sigma_r_dbm = -60.0;
  double power_dbm = 20.0;
  double qos_floor = 1.0;
  double mismatch_budget = 5.0;
  double comp_coeff = 10.0;
  ChannelModel channel_model = ChannelModel::los;
  std::vector<SemanticProfile> semantic_profiles;

  double sweep_start_dbm = 5.0;
  double sweep_stop_dbm = 25.0;
  double sweep_step_dbm = 2.5;

  SensingConfig sensing;
  OptimizerOptions optimizer;
  int music_snapshots = 1000;
  double music_grid_step_deg = 0.5;

  std::filesystem::path output_dir = ".";
  bool emit_trace = false;

  /// Throws ConfigError naming the field.
  void validate() const;
  std::vector<double> sweep_points_dbm() const;
};

/// G = 4 equal weights, Q = 0.5; the first user's precisions are 0.8, every
/// other user's 0.9.
std::vector<SemanticProfile> default_profiles(std::size_t users);

/// JSON file (see README for the schema). An empty file gives the defaults.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

/// The small desk scenario: N = 8 and otherwise the defaults.
ExperimentConfig desk_config();

/// Scenario at `power_dbm`, with gains resolved from the seed.
Scenario build_scenario(const ExperimentConfig& config, double power_dbm);

struct PointResult {
  double power_dbm = 0.0;
  bool semantic = true;     // false for the ρ = 1 benchmark
  bool feasible = false;
  std::string message;      // infeasibility detail
  OptimizerResult result;
  double reference_t = 0.0;
  CMat ref_cov;
};

/// Sensing reference plus one optimizer run at `power_dbm`. Infeasibility is
/// recorded in the result when `capture_infeasible`, thrown otherwise.
PointResult run_point(const ExperimentConfig& config, double power_dbm, bool semantic, bool capture_infeasible);

/// Both modes at every sweep point, on identical channel draws. Rows are
/// ordered by power, semantic first.
std::vector<PointResult> run_sweep(const ExperimentConfig& config);

/// power_dbm,mode,status,ssr_<k>...,sum_ssr,rho_<k>...,comp_mw,cands_mw,outer_iters,inner_solves,randomization_ratio,converged,message
void write_sweep_csv(std::ostream& os, const std::vector<PointResult>& rows, std::size_t users);

/// Runs `config.mode` and writes its files into config.output_dir. Throws
/// ConfigError, and InfeasibleError in the single-run modes.
void execute(const ExperimentConfig& config);

}  // namespace issc
