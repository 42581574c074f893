// Command-line front end: gain synthesis, feasible-region export, robust
// string-stability checks, time-domain simulation and Monte-Carlo averaging
// for vehicle platoons under noisy V2V communication.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "platoon/platoon.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NoiseArgs {
  double rho = 0.0;
  double snr_db = 0.0;
  bool no_noise = false;

  void attach(CLI::App* cmd) {
    auto* rho_opt = cmd->add_option("--rho", rho, "SNR amplitude factor (> 1)");
    auto* db_opt = cmd->add_option("--snr-db", snr_db, "SNR in dB (> 0); rho = 10^(dB/20)");
    auto* off = cmd->add_flag("--no-noise", no_noise, "ideal channel (rho = infinity)");
    rho_opt->excludes(db_opt)->excludes(off);
    db_opt->excludes(off);
  }

  double resolve() const {
    if (no_noise) return kInf;
    if (snr_db != 0.0) return platoon::snr_db_to_rho(snr_db);
    if (rho != 0.0) return rho;
    throw std::invalid_argument("give one of --rho, --snr-db or --no-noise");
  }
};

fs::path output_dir(const std::string& flag_value, const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  if (const char* env = std::getenv("PLATOON_OUT_DIR"); env && *env) return env;
  return ".";
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::binary);  // LF line endings on every platform
  if (!out) throw std::invalid_argument("cannot write '" + path.string() + "'");
  std::cout << "wrote " << path.string() << "\n";
  return out;
}

platoon::GainSet pick_gains_from_region(double ka, double rho, double tau0, double hw) {
  const auto region = platoon::feasible_region(ka, rho, tau0, hw);
  if (!region.nonempty())
    throw std::invalid_argument("cannot synthesize gains: hw <= hw_lb(ka)");
  const double kv = 0.5 * (region.a1 + region.a2);
  const double kp = 0.25 * (region.a1 - region.a2) / hw;
  return platoon::GainSet{ka, kv, kp, hw};
}

/// Gains from the config, or a synthesized set at the optimal ka when absent.
platoon::GainSet resolve_gains(const platoon::RunConfig& cfg) {
  if (cfg.gains) return *cfg.gains;
  if (!cfg.channel)
    throw std::invalid_argument("config: cannot synthesize gains without a channel");
  const auto opt = platoon::optimal_ka_headway(cfg.channel->rho, cfg.platoon.tau0);
  const double hw = 1.05 * opt.hw_lb_star;
  auto gains = pick_gains_from_region(opt.ka_star, cfg.channel->rho, cfg.platoon.tau0, hw);
  std::cout << "synthesized gains: ka = " << gains.ka << ", kv = " << gains.kv
            << ", kp = " << gains.kp << ", hw = " << gains.hw << "\n";
  return gains;
}

void print_summary(const platoon::Trajectory& traj) {
  const auto report = platoon::amplification_ratios(traj.delta);
  double max_abs = 0.0;
  for (double p : report.peak) max_abs = std::max(max_abs, p);
  double len_min = traj.length.front(), len_max = len_min;
  for (double l : traj.length) {
    len_min = std::min(len_min, l);
    len_max = std::max(len_max, l);
  }
  std::cout << "peak |delta_i| [m]:";
  for (double p : report.peak) std::cout << ' ' << p;
  std::cout << "\namplification ratios:";
  for (const auto& r : report.ratio) {
    if (r)
      std::cout << ' ' << *r;
    else
      std::cout << " undefined";
  }
  const auto max_ratio = report.max_ratio();
  std::cout << "\nmax |delta| [m]      : " << max_abs << "\n";
  if (max_ratio)
    std::cout << "max ratio            : " << *max_ratio << "\n";
  std::cout << "platoon length [m]   : min " << len_min << ", max " << len_max << "\n";
  std::cout << "string stable (tol 1e-6): " << (report.string_stable(1e-6) ? "yes" : "no")
            << "\n";
}

int cmd_synth(double rho, double tau0, std::optional<double> ka, std::optional<double> hw,
              bool as_json) {
  const auto result = platoon::synthesize(rho, tau0, ka, hw);
  if (as_json) {
    json j{{"rho", rho == kInf ? json("inf") : json(rho)},
           {"tau0", tau0},
           {"ka_max", result.ka_max},
           {"ka_star", result.optimal.ka_star},
           {"hw_lb_star", result.optimal.hw_lb_star}};
    if (result.ka) j["ka"] = *result.ka;
    if (result.hw_lb) j["hw_lb"] = *result.hw_lb;
    if (result.hw) j["hw"] = *result.hw;
    if (result.region) {
      j["region"] = {{"a1", result.region->a1},
                     {"b1", result.region->b1},
                     {"a2", result.region->a2},
                     {"b2", result.region->b2},
                     {"nonempty", result.region->nonempty()}};
    }
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout.precision(10);
  std::cout << "rho               : " << rho << "\n"
            << "tau0 [s]          : " << tau0 << "\n"
            << "ka upper bound    : " << result.ka_max << "\n";
  if (result.ka) {
    std::cout << "ka (chosen)       : " << *result.ka << "\n"
              << "hw_lb(ka) [s]     : " << *result.hw_lb << "\n";
  }
  std::cout << "ka*               : " << result.optimal.ka_star << "\n"
            << "hw_lb* [s]        : " << result.optimal.hw_lb_star << "\n";
  if (result.region) {
    std::cout << "region a1,b1      : " << result.region->a1 << ", " << result.region->b1 << "\n"
              << "region a2,b2      : " << result.region->a2 << ", " << result.region->b2 << "\n"
              << "region nonempty   : " << (result.region->nonempty() ? "yes" : "no") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"platoon: time-headway selection and simulation for vehicle platoons "
               "with noisy V2V-communicated acceleration"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand(
      "synth", "admissible ka range, headway lower bound and minimizing pair");
  NoiseArgs synth_noise;
  synth_noise.attach(synth);
  double synth_tau0 = 0.5;
  synth->add_option("--tau0", synth_tau0, "actuation lag upper bound [s]")->required();
  double synth_ka = 0.0, synth_hw = 0.0;
  auto* synth_ka_opt = synth->add_option("--ka", synth_ka, "evaluate hw_lb at this ka");
  auto* synth_hw_opt =
      synth->add_option("--hw", synth_hw, "also report the feasible (kp, kv) region")
          ->needs(synth_ka_opt);
  bool synth_json = false;
  synth->add_flag("--json", synth_json, "machine-readable output");

  // --- region --------------------------------------------------------------
  auto* region = app.add_subcommand(
      "region", "export the feasible (kp, kv) region over a grid as CSV");
  NoiseArgs region_noise;
  region_noise.attach(region);
  double region_tau0 = 0.5, region_ka = 0.5, region_hw = 0.95;
  region->add_option("--tau0", region_tau0, "actuation lag upper bound [s]")->required();
  region->add_option("--ka", region_ka, "feedforward gain")->required();
  region->add_option("--hw", region_hw, "time headway [s]")->required();
  double kp_min = 0.0, kp_max = 0.0, kv_min = 0.0, kv_max = 0.0;
  int kp_count = 200, kv_count = 200;
  region->add_option("--kp-min", kp_min, "grid lower bound for kp");
  region->add_option("--kp-max", kp_max, "grid upper bound for kp (default 1.05*b2)");
  region->add_option("--kp-count", kp_count, "grid points for kp");
  region->add_option("--kv-min", kv_min, "grid lower bound for kv");
  region->add_option("--kv-max", kv_max, "grid upper bound for kv (default 1.05*a1)");
  region->add_option("--kv-count", kv_count, "grid points for kv");
  bool region_polygon = false;
  region->add_flag("--polygon", region_polygon, "also export the region corner polygon");
  std::string region_out;
  region->add_option("--out", region_out, "output directory");

  // --- check ---------------------------------------------------------------
  auto* check = app.add_subcommand(
      "check", "robust string-stability verdict and frequency-response CSV");
  std::string check_config;
  check->add_option("--config", check_config, "run configuration (JSON)");
  NoiseArgs check_noise;
  check_noise.attach(check);
  double check_tau0 = 0.0, check_ka = 0.0, check_kp = 0.0, check_kv = 0.0, check_hw = 0.0;
  check->add_option("--tau0", check_tau0, "actuation lag upper bound [s]");
  check->add_option("--ka", check_ka, "feedforward gain");
  check->add_option("--kp", check_kp, "spacing-error gain");
  check->add_option("--kv", check_kv, "relative-velocity gain");
  check->add_option("--hw", check_hw, "time headway [s]");
  std::vector<double> check_gamma;
  check->add_option("--gamma", check_gamma,
                    "channel bit means (comma separated, default 16 x 0.5)")
      ->delimiter(',');
  std::string check_out;
  check->add_option("--out", check_out, "output directory");

  // --- simulate ------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "time-domain platoon run, trajectory CSV");
  std::string sim_config;
  simulate->add_option("--config", sim_config, "run configuration (JSON)")->required();
  std::string sim_mode;
  simulate->add_option("--mode", sim_mode, "override mode: stochastic|averaged|noiseless");
  std::uint64_t sim_seed = 0;
  auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "override master seed");
  int trace_link = 0;
  simulate->add_option("--trace-link", trace_link,
                       "emit the noisy communicated signal of this link (stochastic mode)");
  std::string sim_out;
  simulate->add_option("--out", sim_out, "output directory");

  // --- montecarlo ----------------------------------------------------------
  auto* mc = app.add_subcommand(
      "montecarlo", "mean over stochastic runs with confidence bands, vs averaged mode");
  std::string mc_config;
  mc->add_option("--config", mc_config, "run configuration (JSON)")->required();
  int mc_runs = 0;
  mc->add_option("--runs", mc_runs, "override run count");
  std::uint64_t mc_seed = 0;
  auto* mc_seed_opt = mc->add_option("--seed", mc_seed, "override master seed");
  unsigned mc_threads = 0;
  mc->add_option("--threads", mc_threads, "worker threads (default: hardware)");
  std::string mc_out;
  mc->add_option("--out", mc_out, "output directory");

  // --- sweep ---------------------------------------------------------------
  auto* sweep = app.add_subcommand(
      "sweep", "hw_lb(ka) curves over lists of rho values, CSV + optima");
  std::vector<double> sweep_rhos, sweep_dbs;
  sweep->add_option("--rho", sweep_rhos, "SNR factors (repeatable / comma separated)")
      ->delimiter(',');
  sweep->add_option("--snr-db", sweep_dbs, "SNR values in dB (repeatable / comma separated)")
      ->delimiter(',');
  bool sweep_inf = false;
  sweep->add_flag("--no-noise", sweep_inf, "include the ideal channel (rho = infinity)");
  double sweep_tau0 = 0.5;
  sweep->add_option("--tau0", sweep_tau0, "actuation lag upper bound [s]")->required();
  int sweep_count = 200;
  sweep->add_option("--ka-count", sweep_count, "samples of ka per curve");
  std::string sweep_out;
  sweep->add_option("--out", sweep_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_noise.resolve(), synth_tau0,
                       synth_ka_opt->count() ? std::optional<double>(synth_ka) : std::nullopt,
                       synth_hw_opt->count() ? std::optional<double>(synth_hw) : std::nullopt,
                       synth_json);
    }

    if (region->parsed()) {
      const double rho = region_noise.resolve();
      const auto params = platoon::feasible_region(region_ka, rho, region_tau0, region_hw);
      if (kp_max <= kp_min) kp_max = 1.05 * params.b2;
      if (kv_max <= kv_min) kv_max = 1.05 * params.a1;
      const fs::path dir = output_dir(region_out, "");
      {
        auto out = open_out(dir, "region.csv");
        platoon::csv::write_region_grid(out, params, kp_min, kp_max, kp_count, kv_min,
                                        kv_max, kv_count);
      }
      if (region_polygon) {
        auto out = open_out(dir, "region_polygon.csv");
        platoon::csv::write_region_polygon(out,
                                           platoon::region_polygon(params, kp_max, kv_max));
      }
      std::cout << "a1 = " << params.a1 << ", b1 = " << params.b1 << ", a2 = " << params.a2
                << ", b2 = " << params.b2 << "\n"
                << "region " << (params.nonempty() ? "nonempty" : "EMPTY (hw <= hw_lb)")
                << "\n";
      return 0;
    }

    if (check->parsed()) {
      platoon::GainSet gains;
      platoon::ChannelSpec channel;
      double tau0 = 0.0;
      std::string out_flag = check_out, out_cfg;
      if (!check_config.empty()) {
        const auto cfg = platoon::RunConfig::load(check_config);
        if (!cfg.channel)
          throw std::invalid_argument("check: the config must declare a channel");
        gains = resolve_gains(cfg);
        channel = *cfg.channel;
        tau0 = cfg.platoon.tau0;
        out_cfg = cfg.output_dir;
      } else {
        gains = platoon::GainSet{check_ka, check_kv, check_kp, check_hw};
        channel.rho = check_noise.resolve();
        channel.bit_mean =
            check_gamma.empty() ? std::vector<double>(16, 0.5) : check_gamma;
        tau0 = check_tau0;
        if (!(tau0 > 0.0))
          throw std::invalid_argument("check: give --config or the full flag set with --tau0");
      }
      const auto verdict = platoon::robust_verdict(gains, channel, tau0);
      std::cout << "internal stability : " << (verdict.internally_stable ? "yes" : "no") << "\n"
                << "analytic certificate: "
                << (verdict.analytic.pass() ? "pass" : "fail")
                << " (coefficient margin " << verdict.analytic.coefficient_margin
                << ", constant margin " << verdict.analytic.constant_margin << ")\n"
                << "effective gain     : " << verdict.effective.value << " in ["
                << verdict.effective.lo << ", " << verdict.effective.hi << "]\n";
      for (double kt : {verdict.effective.lo, verdict.effective.value, verdict.effective.hi}) {
        double worst = 0.0, worst_omega = 0.0;
        for (const auto& s : verdict.samples)
          if (s.ktilde_a == kt && s.hinf > worst) {
            worst = s.hinf;
            worst_omega = s.omega;
          }
        std::cout << "  ktilde " << kt << ": worst sampled ||H|| = " << worst
                  << " at omega = " << worst_omega << "\n";
      }
      std::cout << "sampled max ||H||  : " << verdict.max_sampled << " at omega = "
                << verdict.worst_omega << ", tau = " << verdict.worst_tau
                << ", ktilde = " << verdict.worst_ktilde << "\n"
                << "verdict            : " << platoon::to_string(verdict.classification)
                << "\n";
      const fs::path dir = output_dir(out_flag, out_cfg);
      auto out = open_out(dir, "frequency.csv");
      const auto tf = platoon::build_tf(gains, verdict.effective.value, tau0);
      platoon::csv::write_frequency_response(out, tf, 1e-3, 1e3, 2000);
      return 0;
    }

    if (simulate->parsed()) {
      auto cfg = platoon::RunConfig::load(sim_config);
      if (!sim_mode.empty()) cfg.mode = platoon::parse_mode(sim_mode);
      if (sim_seed_opt->count()) cfg.seed = sim_seed;
      const auto gains = resolve_gains(cfg);
      if (!platoon::internal_stability(cfg.platoon.tau, gains.gamma(), gains.kp))
        std::cout << "warning: internal stability violated (gamma <= tau*kp); "
                     "simulating anyway\n";
      const auto traj = platoon::simulate(cfg.platoon, gains, cfg.channel, cfg.mode, cfg.seed);
      const fs::path dir = output_dir(sim_out, cfg.output_dir);
      {
        auto out = open_out(dir, "trajectory.csv");
        platoon::csv::write_trajectory(out, traj);
      }
      if (trace_link > 0) {
        if (cfg.mode != platoon::SimulationMode::stochastic)
          throw std::invalid_argument("simulate: --trace-link needs stochastic mode");
        const auto trace =
            platoon::communicated_signal_trace(traj, *cfg.channel, trace_link, cfg.seed);
        auto out = open_out(dir, "trace_link_" + std::to_string(trace_link) + ".csv");
        platoon::csv::write_communicated_trace(out, trace);
      }
      std::cout << "mode: " << platoon::to_string(cfg.mode) << ", seed: " << cfg.seed << "\n";
      print_summary(traj);
      return 0;
    }

    if (mc->parsed()) {
      auto cfg = platoon::RunConfig::load(mc_config);
      if (mc_runs > 0) cfg.runs = mc_runs;
      if (mc_seed_opt->count()) cfg.seed = mc_seed;
      if (!cfg.channel) throw std::invalid_argument("montecarlo: the config must declare a channel");
      const auto gains = resolve_gains(cfg);
      const auto summary = platoon::monte_carlo_mean(cfg.platoon, gains, *cfg.channel,
                                                     cfg.runs, cfg.seed, mc_threads);
      const auto averaged = platoon::simulate(cfg.platoon, gains, cfg.channel,
                                              platoon::SimulationMode::averaged, cfg.seed);
      const fs::path dir = output_dir(mc_out, cfg.output_dir);
      {
        auto out = open_out(dir, "mc_mean.csv");
        platoon::csv::write_trajectory(
            out, platoon::csv::mean_trajectory(summary, cfg.platoon.standstill_spacing,
                                               gains.hw));
      }
      {
        auto out = open_out(dir, "mc_bands.csv");
        platoon::csv::write_montecarlo_bands(out, summary);
      }
      for (std::size_t i = 0; i < summary.mean_delta.size(); ++i) {
        platoon::MonteCarloSummary one;
        one.time = summary.time;
        one.mean_delta = {summary.mean_delta[i]};
        one.halfwidth_delta = {summary.halfwidth_delta[i]};
        const auto a = platoon::band_agreement(one, {averaged.delta[i]});
        std::cout << "follower " << (i + 1) << ": " << a.inside << "/" << a.total
                  << " samples inside the confidence band\n";
      }
      const auto overall = platoon::band_agreement(summary, averaged.delta);
      std::cout << "overall agreement with averaged mode: " << (100.0 * overall.fraction())
                << "% of samples inside 2*std/sqrt(M) (" << cfg.runs << " runs)\n";
      return 0;
    }

    if (sweep->parsed()) {
      std::vector<double> rhos = sweep_rhos;
      for (double db : sweep_dbs) rhos.push_back(platoon::snr_db_to_rho(db));
      if (sweep_inf) rhos.push_back(kInf);
      if (rhos.empty())
        throw std::invalid_argument("sweep: give at least one of --rho, --snr-db, --no-noise");
      const fs::path dir = output_dir(sweep_out, "");
      auto out = open_out(dir, "sweep.csv");
      out << "rho,tau0,ka,hw_lb\n";
      for (double rho : rhos) {
        const double ka_max = platoon::ka_upper_bound(rho);
        for (int i = 1; i < sweep_count; ++i) {
          const double ka = ka_max * i / sweep_count;
          platoon::csv::put(out, rho);
          out << ',';
          platoon::csv::put(out, sweep_tau0);
          out << ',';
          platoon::csv::put(out, ka);
          out << ',';
          platoon::csv::put(out, platoon::headway_lower_bound(ka, rho, sweep_tau0));
          out << '\n';
        }
        const auto opt = platoon::optimal_ka_headway(rho, sweep_tau0);
        std::cout << "rho = " << rho << ": ka* = " << opt.ka_star
                  << ", hw_lb* = " << opt.hw_lb_star << " s\n";
      }
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
