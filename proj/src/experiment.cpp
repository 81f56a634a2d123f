#include "issc/experiment.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace issc {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown field");
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "must be finite");
  return d;
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

bool boolean(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

SemanticProfile parse_profile(const json& v, const std::string& path) {
  check_keys(v, path, {"weights", "precisions", "precision", "n_grams", "quality_floor"});
  SemanticProfile p;
  if (v.contains("precisions") && v.contains("precision")) fail(path, "give either precisions or precision");
  if (v.contains("precisions")) {
    p.precisions = numbers(v["precisions"], path + ".precisions");
  } else {
    const int g = v.contains("n_grams") ? integer(v["n_grams"], path + ".n_grams") : 4;
    if (g < 1) fail(path + ".n_grams", "must be positive");
    const double prec = v.contains("precision") ? number(v["precision"], path + ".precision") : 0.9;
    p.precisions.assign(static_cast<std::size_t>(g), prec);
  }
  if (v.contains("weights")) {
    p.weights = numbers(v["weights"], path + ".weights");
  } else {
    p.weights.assign(p.precisions.size(), 1.0 / static_cast<double>(p.precisions.size()));
  }
  p.quality_floor = v.contains("quality_floor") ? number(v["quality_floor"], path + ".quality_floor") : 0.5;
  try {
    p.validate();
  } catch (const DomainError& e) {
    fail(path, e.what());
  }
  return p;
}

ChannelModel parse_channel(const std::string& s, const std::string& path) {
  if (s == "los") return ChannelModel::los;
  if (s == "rayleigh") return ChannelModel::rayleigh;
  fail(path, "expected \"los\" or \"rayleigh\"");
}

std::string fixed_csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

template <class F>
void write_file(const std::filesystem::path& path, F&& fill) {
  std::ostringstream os;
  fill(os);
  write_text(path, os.str());
}

void write_beams(const std::filesystem::path& dir, const PointResult& p) {
  std::filesystem::create_directories(dir);
  const auto& b = p.result.rank_one_beams;
  for (std::size_t k = 0; k < b.w_mats.size(); ++k)
    write_file(dir / ("w_" + std::to_string(k) + ".csv"), [&](std::ostream& os) { write_complex_csv(os, b.w_mats[k]); });
  for (std::size_t l = 0; l < b.r_mats.size(); ++l)
    write_file(dir / ("r_" + std::to_string(l) + ".csv"), [&](std::ostream& os) { write_complex_csv(os, b.r_mats[l]); });
}

json point_json(const PointResult& p, double comp_coeff) {
  json j;
  j["power_dbm"] = p.power_dbm;
  j["mode"] = p.semantic ? "semantic" : "benchmark";
  j["feasible"] = p.feasible;
  if (!p.feasible) {
    j["message"] = p.message;
    return j;
  }
  const auto& r = p.result;
  j["converged"] = r.converged;
  j["outer_iterations"] = r.state.outer_iter;
  j["inner_solves"] = r.state.inner_solves;
  j["objective_history"] = r.state.objective_history;
  j["ssr"] = r.report.ssr;
  j["ssr_unclamped"] = r.report.ssr_unclamped;
  j["sum_ssr"] = r.report.sum_ssr();
  j["semantic_rates"] = r.report.semantic_rates;
  j["sinr"] = r.report.per_user_sinr;
  j["eav_snr"] = r.report.eav_snr;
  j["rhos"] = r.state.rhos;
  j["lambdas"] = r.state.lambdas;
  j["comp_mw"] = computation_power(comp_coeff, r.state.rhos);
  j["cands_mw"] = r.rank_one_beams.total_power();
  j["randomization_ratio"] = r.randomization_ratio;
  j["reference_t"] = p.reference_t;
  return j;
}

json scenario_json(const Scenario& sc) {
  json j;
  j["n_antennas"] = sc.n_antennas();
  j["cu_gains"] = sc.cu_gains;
  j["target_gains_alpha"] = sc.target_gains_alpha;
  j["target_gains_beta"] = sc.target_gains_beta;
  j["sigma2_c_mw"] = sc.sigma2_c;
  j["sigma2_r_mw"] = sc.sigma2_r;
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "run") return Mode::run;
  if (name == "sweep") return Mode::sweep;
  if (name == "sensing-ref") return Mode::sensing_ref;
  if (name == "music") return Mode::music;
  if (name == "bench") return Mode::bench;
  if (name == "bench2") throw ConfigError("mode: bench2 (the second benchmark) is not implemented");
  throw ConfigError("mode: unknown mode \"" + name + "\"");
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::run: return "run";
    case Mode::sweep: return "sweep";
    case Mode::sensing_ref: return "sensing-ref";
    case Mode::music: return "music";
    case Mode::bench: return "bench";
  }
  return "?";
}

std::vector<SemanticProfile> default_profiles(std::size_t users) {
  std::vector<SemanticProfile> out;
  for (std::size_t k = 0; k < users; ++k) out.push_back(SemanticProfile::uniform(4, k == 0 ? 0.8 : 0.9, 0.5));
  return out;
}

void ExperimentConfig::validate() const {
  if (n_antennas < 2) fail("scenario.n_antennas", "need at least 2 antennas");
  if (!(spacing_ratio > 0.0)) fail("scenario.spacing_ratio", "must be positive");
  if (cu_angles_deg.empty()) fail("scenario.cu_angles_deg", "need at least one user");
  if (target_angles_deg.empty()) fail("scenario.target_angles_deg", "need at least one target");
  auto check_angles = [](const std::vector<double>& v, const std::string& path) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(std::abs(v[i]) <= 90.0)) fail(path + "[" + std::to_string(i) + "]", "angle must lie in [-90, 90] degrees");
  };
  check_angles(cu_angles_deg, "scenario.cu_angles_deg");
  check_angles(target_angles_deg, "scenario.target_angles_deg");
  auto check_gains = [](const std::vector<double>& v, std::size_t n, const std::string& path) {
    if (!v.empty() && v.size() != n) fail(path, "expected " + std::to_string(n) + " entries");
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(v[i] > 0.0)) fail(path + "[" + std::to_string(i) + "]", "gain must be positive");
  };
  check_gains(cu_gains, cu_angles_deg.size(), "scenario.cu_gains");
  check_gains(target_gains_alpha, target_angles_deg.size(), "scenario.target_gains_alpha");
  check_gains(target_gains_beta, target_angles_deg.size(), "scenario.target_gains_beta");
  if (!(gain_min > 0.0 && gain_max >= gain_min)) fail("scenario.gain_range", "need 0 < min <= max");
  if (!semantic_profiles.empty() && semantic_profiles.size() != cu_angles_deg.size())
    fail("scenario.semantic_profiles", "expected one profile per user");
  if (!(qos_floor > 0.0)) fail("scenario.qos_floor", "must be positive");
  if (!(mismatch_budget > 0.0)) fail("scenario.mismatch_budget", "must be positive");
  if (!(comp_coeff > 0.0)) fail("scenario.comp_coeff", "must be positive");
  if (!(sweep_step_dbm > 0.0)) fail("sweep_dbm.step", "must be positive");
  if (!(sweep_stop_dbm >= sweep_start_dbm)) fail("sweep_dbm.stop", "must not be below start");
  if (music_snapshots < n_antennas) fail("music.snapshots", "need at least as many snapshots as antennas");
  if (!(music_grid_step_deg > 0.0 && music_grid_step_deg <= 180.0)) fail("music.grid_step_deg", "bad grid step");
  try {
    sensing.validate();
  } catch (const DomainError& e) {
    fail("sensing", e.what());
  }
  try {
    optimizer.validate();
  } catch (const DomainError& e) {
    fail("optimizer", e.what());
  }
  try {
    build_scenario(*this, power_dbm).validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const DomainError& e) {
    fail("scenario", e.what());
  }
}

std::vector<double> ExperimentConfig::sweep_points_dbm() const {
  std::vector<double> out;
  const int count = static_cast<int>(std::floor((sweep_stop_dbm - sweep_start_dbm) / sweep_step_dbm + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) out.push_back(sweep_start_dbm + i * sweep_step_dbm);
  return out;
}

ExperimentConfig parse_config(const std::string& content) {
  ExperimentConfig cfg;
  if (content.find_first_not_of(" \t\r\n") == std::string::npos) {
    cfg.validate();
    return cfg;
  }
  json root;
  try {
    root = json::parse(content);
  } catch (const json::parse_error& e) {
    fail("<root>", std::string("JSON parse error: ") + e.what());
  }
  check_keys(root, "",
             {"mode", "seed", "scenario", "sweep_dbm", "sensing", "optimizer", "music", "output_dir", "emit_trace"});
  if (root.contains("mode")) cfg.mode = parse_mode(text(root["mode"], "mode"));
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) fail("seed", "expected a non-negative integer");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("scenario")) {
    const json& s = root["scenario"];
    const std::string p = "scenario";
    check_keys(s, p,
               {"n_antennas", "spacing_ratio", "cu_angles_deg", "target_angles_deg", "cu_gains", "target_gains_alpha",
                "target_gains_beta", "gain_range", "noise_dbm", "sigma_c_dbm", "sigma_r_dbm", "power_dbm", "qos_floor",
                "mismatch_budget", "comp_coeff", "channel_model", "semantic_profiles"});
    if (s.contains("n_antennas")) cfg.n_antennas = integer(s["n_antennas"], join(p, "n_antennas"));
    if (s.contains("spacing_ratio")) cfg.spacing_ratio = number(s["spacing_ratio"], join(p, "spacing_ratio"));
    if (s.contains("cu_angles_deg")) cfg.cu_angles_deg = numbers(s["cu_angles_deg"], join(p, "cu_angles_deg"));
    if (s.contains("target_angles_deg"))
      cfg.target_angles_deg = numbers(s["target_angles_deg"], join(p, "target_angles_deg"));
    if (s.contains("cu_gains")) cfg.cu_gains = numbers(s["cu_gains"], join(p, "cu_gains"));
    if (s.contains("target_gains_alpha"))
      cfg.target_gains_alpha = numbers(s["target_gains_alpha"], join(p, "target_gains_alpha"));
    if (s.contains("target_gains_beta"))
      cfg.target_gains_beta = numbers(s["target_gains_beta"], join(p, "target_gains_beta"));
    if (s.contains("gain_range")) {
      const auto r = numbers(s["gain_range"], join(p, "gain_range"));
      if (r.size() != 2) fail(join(p, "gain_range"), "expected [min, max]");
      cfg.gain_min = r[0];
      cfg.gain_max = r[1];
    }
    if (s.contains("noise_dbm")) cfg.sigma_c_dbm = cfg.sigma_r_dbm = number(s["noise_dbm"], join(p, "noise_dbm"));
    if (s.contains("sigma_c_dbm")) cfg.sigma_c_dbm = number(s["sigma_c_dbm"], join(p, "sigma_c_dbm"));
    if (s.contains("sigma_r_dbm")) cfg.sigma_r_dbm = number(s["sigma_r_dbm"], join(p, "sigma_r_dbm"));
    if (s.contains("power_dbm")) cfg.power_dbm = number(s["power_dbm"], join(p, "power_dbm"));
    if (s.contains("qos_floor")) cfg.qos_floor = number(s["qos_floor"], join(p, "qos_floor"));
    if (s.contains("mismatch_budget")) cfg.mismatch_budget = number(s["mismatch_budget"], join(p, "mismatch_budget"));
    if (s.contains("comp_coeff")) cfg.comp_coeff = number(s["comp_coeff"], join(p, "comp_coeff"));
    if (s.contains("channel_model"))
      cfg.channel_model = parse_channel(text(s["channel_model"], join(p, "channel_model")), join(p, "channel_model"));
    if (s.contains("semantic_profiles")) {
      const json& v = s["semantic_profiles"];
      if (!v.is_array()) fail(join(p, "semantic_profiles"), "expected a list");
      for (std::size_t i = 0; i < v.size(); ++i)
        cfg.semantic_profiles.push_back(parse_profile(v[i], join(p, "semantic_profiles") + "[" + std::to_string(i) + "]"));
    }
  }
  if (root.contains("sweep_dbm")) {
    const json& s = root["sweep_dbm"];
    check_keys(s, "sweep_dbm", {"start", "stop", "step"});
    if (s.contains("start")) cfg.sweep_start_dbm = number(s["start"], "sweep_dbm.start");
    if (s.contains("stop")) cfg.sweep_stop_dbm = number(s["stop"], "sweep_dbm.stop");
    if (s.contains("step")) cfg.sweep_step_dbm = number(s["step"], "sweep_dbm.step");
  }
  if (root.contains("sensing")) {
    const json& s = root["sensing"];
    check_keys(s, "sensing", {"sidelobe_margin_deg", "grid_step_deg", "crosscorr_tol_rel"});
    if (s.contains("sidelobe_margin_deg"))
      cfg.sensing.sidelobe_margin_deg = number(s["sidelobe_margin_deg"], "sensing.sidelobe_margin_deg");
    if (s.contains("grid_step_deg")) cfg.sensing.grid_step_deg = number(s["grid_step_deg"], "sensing.grid_step_deg");
    if (s.contains("crosscorr_tol_rel"))
      cfg.sensing.crosscorr_tol_rel = number(s["crosscorr_tol_rel"], "sensing.crosscorr_tol_rel");
  }
  if (root.contains("optimizer")) {
    const json& s = root["optimizer"];
    auto& o = cfg.optimizer;
    check_keys(s, "optimizer",
               {"tol_beams", "tol_lambda", "outer_tol", "max_outer", "max_inner", "randomization_draws",
                "rank_one_ratio_tol", "rebalance_power", "solver_tol", "solver_max_iter"});
    if (s.contains("tol_beams")) o.tol_beams = number(s["tol_beams"], "optimizer.tol_beams");
    if (s.contains("tol_lambda")) o.tol_lambda = number(s["tol_lambda"], "optimizer.tol_lambda");
    if (s.contains("outer_tol")) o.outer_tol = number(s["outer_tol"], "optimizer.outer_tol");
    if (s.contains("max_outer")) o.max_outer = integer(s["max_outer"], "optimizer.max_outer");
    if (s.contains("max_inner")) o.max_inner = integer(s["max_inner"], "optimizer.max_inner");
    if (s.contains("randomization_draws"))
      o.randomization_draws = integer(s["randomization_draws"], "optimizer.randomization_draws");
    if (s.contains("rank_one_ratio_tol"))
      o.rank_one_ratio_tol = number(s["rank_one_ratio_tol"], "optimizer.rank_one_ratio_tol");
    if (s.contains("rebalance_power")) o.rebalance_power = boolean(s["rebalance_power"], "optimizer.rebalance_power");
    if (s.contains("solver_tol")) o.solver.tol = number(s["solver_tol"], "optimizer.solver_tol");
    if (s.contains("solver_max_iter")) o.solver.max_iter = integer(s["solver_max_iter"], "optimizer.solver_max_iter");
  }
  if (root.contains("music")) {
    const json& s = root["music"];
    check_keys(s, "music", {"snapshots", "grid_step_deg"});
    if (s.contains("snapshots")) cfg.music_snapshots = integer(s["snapshots"], "music.snapshots");
    if (s.contains("grid_step_deg")) cfg.music_grid_step_deg = number(s["grid_step_deg"], "music.grid_step_deg");
  }
  if (root.contains("output_dir")) cfg.output_dir = text(root["output_dir"], "output_dir");
  if (root.contains("emit_trace")) cfg.emit_trace = boolean(root["emit_trace"], "emit_trace");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

ExperimentConfig desk_config() {
  ExperimentConfig cfg;
  cfg.n_antennas = 8;
  return cfg;
}

Scenario build_scenario(const ExperimentConfig& cfg, double power_dbm) {
  Scenario sc;
  sc.geometry.n_antennas = cfg.n_antennas;
  sc.geometry.spacing_ratio = cfg.spacing_ratio;
  for (double d : cfg.cu_angles_deg) sc.cu_angles.push_back(deg_to_rad(d));
  for (double d : cfg.target_angles_deg) sc.target_angles.push_back(deg_to_rad(d));

  // Every draw is taken even when a list is given, so one list's override
  // leaves the others unchanged.
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> gain(cfg.gain_min, cfg.gain_max);
  auto draw = [&](std::size_t n, const std::vector<double>& given) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(gain(rng));
    return given.empty() ? v : given;
  };
  sc.cu_gains = draw(sc.n_users(), cfg.cu_gains);
  sc.target_gains_alpha = draw(sc.n_targets(), cfg.target_gains_alpha);
  sc.target_gains_beta = draw(sc.n_targets(), cfg.target_gains_beta);

  sc.sigma2_c = dbm_to_mw(cfg.sigma_c_dbm);
  sc.sigma2_r = dbm_to_mw(cfg.sigma_r_dbm);
  sc.power_budget_mw = dbm_to_mw(power_dbm);
  sc.qos_floor = cfg.qos_floor;
  sc.mismatch_budget = cfg.mismatch_budget;
  sc.comp_coeff = cfg.comp_coeff;
  sc.semantic_profiles = cfg.semantic_profiles.empty() ? default_profiles(sc.n_users()) : cfg.semantic_profiles;
  sc.seed = cfg.seed;
  sc.channel_model = cfg.channel_model;
  return sc;
}

PointResult run_point(const ExperimentConfig& cfg, double power_dbm, bool semantic, bool capture_infeasible) {
  PointResult p;
  p.power_dbm = power_dbm;
  p.semantic = semantic;
  const Scenario sc = build_scenario(cfg, power_dbm);
  OptimizerOptions opt = cfg.optimizer;
  opt.fix_rho = !semantic;
  opt.seed = cfg.seed;
  try {
    const ReferenceDesign ref = design_reference_cov(sc, cfg.sensing);
    p.ref_cov = ref.cov;
    p.reference_t = ref.t;
    p.result = run(sc, ref.cov, opt);
    p.feasible = true;
  } catch (const InfeasibleError& e) {
    if (!capture_infeasible) throw;
    p.message = e.what();
  }
  return p;
}

std::vector<PointResult> run_sweep(const ExperimentConfig& cfg) {
  std::vector<PointResult> rows;
  for (double dbm : cfg.sweep_points_dbm())
    for (bool semantic : {true, false}) rows.push_back(run_point(cfg, dbm, semantic, true));
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<PointResult>& rows, std::size_t users) {
  os << "power_dbm,mode,status";
  for (std::size_t k = 0; k < users; ++k) os << ",ssr_" << k;
  os << ",sum_ssr";
  for (std::size_t k = 0; k < users; ++k) os << ",rho_" << k;
  os << ",comp_mw,cands_mw,outer_iters,inner_solves,randomization_ratio,converged,message\n";
  for (const auto& p : rows) {
    std::ostringstream line;
    line << fixed_csv_number(p.power_dbm) << ',' << (p.semantic ? "semantic" : "benchmark") << ','
         << (p.feasible ? "ok" : "infeasible");
    if (p.feasible) {
      const auto& r = p.result;
      for (double v : r.report.ssr) line << ',' << fixed_csv_number(v);
      line << ',' << fixed_csv_number(r.report.sum_ssr());
      for (double v : r.state.rhos) line << ',' << fixed_csv_number(v);
      line << ',' << fixed_csv_number(r.trace.empty() ? 0.0 : r.trace.back().comp_mw) << ','
           << fixed_csv_number(r.rank_one_beams.total_power()) << ',' << r.state.outer_iter << ','
           << r.state.inner_solves << ',' << fixed_csv_number(r.randomization_ratio) << ','
           << (r.converged ? 1 : 0) << ',';
    } else {
      for (std::size_t i = 0; i < 2 * users + 7; ++i) line << ',';
      std::string msg = p.message;
      for (char& c : msg)
        if (c == '"') c = '\'';
      line << '"' << msg << '"';
    }
    os << line.str() << '\n';
  }
}

void execute(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto out = cfg.output_dir;
  std::filesystem::create_directories(out);
  json meta;
  meta["version"] = kVersion;
  meta["mode"] = mode_name(cfg.mode);
  meta["seed"] = cfg.seed;

  switch (cfg.mode) {
    case Mode::run:
    case Mode::bench: {
      const PointResult p = run_point(cfg, cfg.power_dbm, cfg.mode == Mode::run, false);
      meta["scenario"] = scenario_json(build_scenario(cfg, cfg.power_dbm));
      meta["result"] = point_json(p, cfg.comp_coeff);
      write_text(out / "summary.json", dump(meta));
      write_file(out / "ref_cov.csv", [&](std::ostream& os) { write_complex_csv(os, p.ref_cov); });
      write_beams(out / "beams", p);
      if (cfg.emit_trace)
        write_file(out / "trace.csv", [&](std::ostream& os) { write_iteration_csv(os, p.result.trace); });
      break;
    }
    case Mode::sweep: {
      const auto rows = run_sweep(cfg);
      const std::size_t users = cfg.cu_angles_deg.size();
      write_file(out / "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, rows, users); });
      meta["scenario"] = scenario_json(build_scenario(cfg, cfg.sweep_start_dbm));
      json points = json::array();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& p = rows[i];
        const json pj = point_json(p, cfg.comp_coeff);
        if (p.feasible) {
          const std::string tag = "point_" + std::to_string(i / 2) + (p.semantic ? "_semantic" : "_benchmark");
          write_beams(out / "beams" / tag, p);
          if (cfg.emit_trace)
            write_file(out / ("trace_" + tag + ".csv"), [&](std::ostream& os) { write_iteration_csv(os, p.result.trace); });
        }
        points.push_back(pj);
      }
      meta["points"] = points;
      write_text(out / "sweep_summary.json", dump(meta));
      break;
    }
    case Mode::sensing_ref: {
      const Scenario sc = build_scenario(cfg, cfg.power_dbm);
      const ReferenceDesign ref = design_reference_cov(sc, cfg.sensing);
      write_file(out / "ref_cov.csv", [&](std::ostream& os) { write_complex_csv(os, ref.cov); });
      const auto grid = default_angle_grid();
      const auto pattern = beampattern(sc.geometry, ref.cov, grid);
      write_file(out / "beampattern.csv", [&](std::ostream& os) {
        os << "angle_deg,pattern_mw\n";
        for (std::size_t i = 0; i < grid.size(); ++i)
          os << fixed_csv_number(rad_to_deg(grid[i])) << ',' << fixed_csv_number(pattern[i]) << '\n';
      });
      meta["power_dbm"] = cfg.power_dbm;
      meta["t"] = ref.t;
      meta["status"] = conic::to_string(ref.status);
      meta["newton_steps"] = ref.newton_steps;
      meta["kkt_residual"] = ref.kkt_residual;
      meta["sidelobe_angles"] = ref.sidelobe_angles.size();
      meta["crosscorr_tol"] = ref.crosscorr_tol;
      write_text(out / "summary.json", dump(meta));
      break;
    }
    case Mode::music: {
      const Scenario sc = build_scenario(cfg, cfg.power_dbm);
      json modes;
      for (bool semantic : {true, false}) {
        const PointResult p = run_point(cfg, cfg.power_dbm, semantic, false);
        const CMat echoes = simulate_echoes(sc, p.result.rank_one_beams, cfg.music_snapshots, cfg.seed + 1);
        const MusicResult m =
            music_spectrum(sc.geometry, echoes, sc.n_targets(), cfg.music_grid_step_deg, sc.target_angles);
        const std::string name = semantic ? "semantic" : "benchmark";
        write_file(out / ("music_" + name + ".csv"), [&](std::ostream& os) { write_music_csv(os, m); });
        json mj;
        mj["peaks_deg"] = m.peak_angles_deg;
        mj["largest_peaks_deg"] = largest_peaks(m, sc.n_targets());
        mj["peak_errors_deg"] = m.peak_errors_deg;
        mj["sum_ssr"] = p.result.report.sum_ssr();
        modes[name] = mj;
      }
      meta["power_dbm"] = cfg.power_dbm;
      meta["snapshots"] = cfg.music_snapshots;
      meta["target_angles_deg"] = cfg.target_angles_deg;
      meta["music"] = modes;
      write_text(out / "summary.json", dump(meta));
      break;
    }
  }
}

}  // namespace issc
