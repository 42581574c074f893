#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "platoon/core.hpp"
#include "platoon/noise_channel.hpp"
#include "platoon/simulator.hpp"

namespace platoon {

/// One workflow's worth of configuration: platoon parameters, optional
/// controller gains (synthesized when absent), optional noise channel, the
/// simulation mode, seed and Monte-Carlo run count. Loading re-validates
/// every module-level invariant.
struct RunConfig {
  PlatoonConfig platoon;
  std::optional<GainSet> gains;
  std::optional<ChannelSpec> channel;
  SimulationMode mode = SimulationMode::averaged;
  std::uint64_t seed = 1;
  int runs = 500;
  std::string output_dir;

  void validate() const {
    platoon.validate();
    if (gains) gains->validate();
    if (channel) channel->validate();
    if (mode != SimulationMode::noiseless && !channel)
      throw std::invalid_argument("config: stochastic and averaged modes require a channel");
    if (runs < 1) throw std::invalid_argument("config: runs must be positive");
  }

  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

inline SimulationMode parse_mode(const std::string& s) {
  if (s == "stochastic") return SimulationMode::stochastic;
  if (s == "averaged") return SimulationMode::averaged;
  if (s == "noiseless") return SimulationMode::noiseless;
  throw std::invalid_argument("config: unknown mode '" + s + "'");
}

namespace detail {

inline LeadProfileKind parse_profile_kind(const std::string& s) {
  if (s == "constant") return LeadProfileKind::constant;
  if (s == "windowed_sine") return LeadProfileKind::windowed_sine;
  if (s == "table") return LeadProfileKind::table;
  throw std::invalid_argument("config: unknown lead profile kind '" + s + "'");
}

inline const char* profile_kind_name(LeadProfileKind k) {
  switch (k) {
    case LeadProfileKind::constant: return "constant";
    case LeadProfileKind::windowed_sine: return "windowed_sine";
    case LeadProfileKind::table: return "table";
  }
  return "?";
}

}  // namespace detail

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig cfg;
  const auto& p = j.at("platoon");
  cfg.platoon.followers = p.at("followers").get<int>();
  cfg.platoon.tau = p.at("tau").get<double>();
  cfg.platoon.tau0 = p.at("tau0").get<double>();
  cfg.platoon.standstill_spacing = p.at("standstill_spacing").get<double>();
  cfg.platoon.initial_speed = p.at("initial_speed").get<double>();
  cfg.platoon.dt = p.at("dt").get<double>();
  cfg.platoon.horizon = p.at("horizon").get<double>();

  const auto& lp = j.at("lead_profile");
  LeadProfile& lead = cfg.platoon.lead;
  lead.kind = detail::parse_profile_kind(lp.at("kind").get<std::string>());
  if (lead.kind == LeadProfileKind::table) {
    lead.table_time = lp.at("time").get<std::vector<double>>();
    lead.table_accel = lp.at("accel").get<std::vector<double>>();
  } else {
    lead.amplitude = lp.at("amplitude").get<double>();
    if (lead.kind == LeadProfileKind::windowed_sine)
      lead.frequency = lp.at("frequency").get<double>();
    lead.start = lp.at("start").get<double>();
    lead.end = lp.at("end").get<double>();
  }

  if (j.contains("gains")) {
    const auto& g = j.at("gains");
    cfg.gains = GainSet{g.at("ka").get<double>(), g.at("kv").get<double>(),
                        g.at("kp").get<double>(), g.at("hw").get<double>()};
  }

  if (j.contains("channel")) {
    const auto& ch = j.at("channel");
    ChannelSpec spec;
    if (ch.contains("rho"))
      spec.rho = ch.at("rho").get<double>();
    else
      spec.rho = snr_db_to_rho(ch.at("snr_db").get<double>());
    spec.bit_mean = ch.at("bit_means").get<std::vector<double>>();
    if (ch.contains("bits") && ch.at("bits").get<int>() != spec.bits())
      throw std::invalid_argument("config: channel bit count does not match the bit_means list");
    cfg.channel = std::move(spec);
  }

  cfg.mode = parse_mode(j.value("mode", std::string("averaged")));
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.runs = j.value("runs", 500);
  cfg.output_dir = j.value("output_dir", std::string());
  cfg.validate();
  return cfg;
}

inline nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["platoon"] = {{"followers", platoon.followers},
                  {"tau", platoon.tau},
                  {"tau0", platoon.tau0},
                  {"standstill_spacing", platoon.standstill_spacing},
                  {"initial_speed", platoon.initial_speed},
                  {"dt", platoon.dt},
                  {"horizon", platoon.horizon}};
  const LeadProfile& lead = platoon.lead;
  nlohmann::json lp;
  lp["kind"] = detail::profile_kind_name(lead.kind);
  if (lead.kind == LeadProfileKind::table) {
    lp["time"] = lead.table_time;
    lp["accel"] = lead.table_accel;
  } else {
    lp["amplitude"] = lead.amplitude;
    if (lead.kind == LeadProfileKind::windowed_sine) lp["frequency"] = lead.frequency;
    lp["start"] = lead.start;
    lp["end"] = lead.end;
  }
  j["lead_profile"] = lp;
  if (gains)
    j["gains"] = {{"ka", gains->ka}, {"kv", gains->kv}, {"kp", gains->kp}, {"hw", gains->hw}};
  if (channel) {
    j["channel"] = {{"rho", channel->rho},
                    {"bits", channel->bits()},
                    {"bit_means", channel->bit_mean}};
  }
  j["mode"] = to_string(mode);
  j["seed"] = seed;
  j["runs"] = runs;
  if (!output_dir.empty()) j["output_dir"] = output_dir;
  return j;
}

inline RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: parse error in '" + path + "': " + e.what());
  }
  try {
    return from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: invalid document '" + path + "': " + e.what());
  }
}

inline void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("config: cannot write '" + path + "'");
  out << to_json().dump(2) << '\n';
}

}  // namespace platoon
