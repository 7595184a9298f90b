#include "cavitymc/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cavitymc/errors.hpp"

namespace cavitymc {
namespace {

struct KeySpec {
  const char* key;
  double factor;  // internal = display * factor
  double* (*field)(SimConfig&);
};

struct IntKeySpec {
  const char* key;
  int* (*field)(SimConfig&);
};

constexpr double kNm = 1e-9;
constexpr double kUm = 1e-6;
constexpr double kUs = 1e-6;
constexpr double kMs = 1e-3;
constexpr double kNs = 1e-9;
constexpr double kUk = 1e-6;
constexpr double kMk = kBoltzmann * 1e-3;

// clang-format off
const KeySpec kKeys[] = {
    {"g0_mhz",                  mhz(1.0), +[](SimConfig& c) { return &c.physical.g0; }},
    {"gamma_mhz",               mhz(1.0), +[](SimConfig& c) { return &c.physical.gamma; }},
    {"kappa_mhz",               mhz(1.0), +[](SimConfig& c) { return &c.physical.kappa; }},
    {"lambda_probe_nm",         kNm,      +[](SimConfig& c) { return &c.physical.lambda_probe; }},
    {"lambda_trap_nm",          kNm,      +[](SimConfig& c) { return &c.physical.lambda_trap; }},
    {"waist_um",                kUm,      +[](SimConfig& c) { return &c.physical.waist; }},
    {"cavity_length_um",        kUm,      +[](SimConfig& c) { return &c.physical.cavity_length; }},
    {"atom_mass_kg",            1.0,      +[](SimConfig& c) { return &c.physical.atom_mass; }},
    {"delta_a0_mhz",            mhz(1.0), +[](SimConfig& c) { return &c.physical.delta_a0; }},
    {"stark_per_depth",         1.0,      +[](SimConfig& c) { return &c.physical.stark_per_depth; }},
    {"cooling_duration_us",     kUs,      +[](SimConfig& c) { return &c.protocol.cooling_duration; }},
    {"probe_duration_us",       kUs,      +[](SimConfig& c) { return &c.protocol.probe_duration; }},
    {"probe_delta_c_mhz",       mhz(1.0), +[](SimConfig& c) { return &c.protocol.probe_delta_c; }},
    {"trap_depth_guide_mk",     kMk,      +[](SimConfig& c) { return &c.protocol.trap_depth_guide; }},
    {"trap_depth_hold_mk",      kMk,      +[](SimConfig& c) { return &c.protocol.trap_depth_hold; }},
    {"qualification_threshold", 1.0,      +[](SimConfig& c) { return &c.protocol.qualification_threshold; }},
    {"exit_threshold",          1.0,      +[](SimConfig& c) { return &c.protocol.exit_threshold; }},
    {"max_run_time_ms",         kMs,      +[](SimConfig& c) { return &c.protocol.max_run_time; }},
    {"eta_probe_mhz",           mhz(1.0), +[](SimConfig& c) { return &c.protocol.eta_probe; }},
    {"eta_trigger_mhz",         mhz(1.0), +[](SimConfig& c) { return &c.protocol.eta_trigger; }},
    {"trigger_bin_us",          kUs,      +[](SimConfig& c) { return &c.protocol.trigger.bin_time; }},
    {"trigger_threshold_rel",   1.0,      +[](SimConfig& c) { return &c.protocol.trigger.threshold_rel; }},
    {"trigger_qe",              1.0,      +[](SimConfig& c) { return &c.protocol.trigger.quantum_efficiency; }},
    {"trigger_max_time_ms",     kMs,      +[](SimConfig& c) { return &c.protocol.trigger.max_time; }},
    {"sigma_eps",               1.0,      +[](SimConfig& c) { return &c.noise.sigma_eps; }},
    {"tau_noise_us",            kUs,      +[](SimConfig& c) { return &c.noise.tau_noise; }},
    {"dt_ns",                   kNs,      +[](SimConfig& c) { return &c.integrator.dt; }},
    {"storage_target_ms",       kMs,      +[](SimConfig& c) { return &c.storage_target; }},
    {"calib_max_time_ms",       kMs,      +[](SimConfig& c) { return &c.calib_max_time; }},
    {"calib_dt_ns",             kNs,      +[](SimConfig& c) { return &c.calib_dt; }},
    {"calib_temperature_uk",    kUk,      +[](SimConfig& c) { return &c.calib_temperature; }},
    {"excitation_target",       1.0,      +[](SimConfig& c) { return &c.excitation_target; }},
    {"oracle_n_empty",          1.0,      +[](SimConfig& c) { return &c.oracle_n_empty; }},
};

const IntKeySpec kIntKeys[] = {
    {"record_stride",      +[](SimConfig& c) { return &c.integrator.record_stride; }},
    {"calib_trajectories", +[](SimConfig& c) { return &c.calib_trajectories; }},
    {"oracle_n_max",       +[](SimConfig& c) { return &c.oracle_n_max; }},
};
// clang-format on

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double parse_double(int line, const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    fail(line, "invalid value for '" + key + "': '" + text + "'");
  }
  if (pos != text.size())
    fail(line, "trailing characters in value for '" + key + "': '" + text + "'");
  if (!std::isfinite(v)) fail(line, "non-finite value for '" + key + "'");
  return v;
}

}  // namespace

SimConfig::SimConfig() {
  integrator.dt = 2e-9;  // acceptance-scale step; guarded in validate()
}

void SimConfig::validate() const {
  physical.validate();
  protocol.validate();
  if (!(integrator.dt > 0.0)) throw ConfigError("dt must be > 0");
  // Drive-on stability guard: the field propagator is exact but forces are
  // sampled per step, so the fastest internal rate must stay resolved.
  const double rate =
      std::max({physical.g0, physical.kappa, physical.gamma});
  if (integrator.dt * rate > 0.25)
    throw ConfigError("dt too large for the fastest internal rate");
  if (integrator.record_stride < 1) throw ConfigError("record_stride must be >= 1");
  if (!(noise.sigma_eps >= 0.0)) throw ConfigError("sigma_eps must be >= 0");
  if (!(noise.tau_noise > 0.0)) throw ConfigError("tau_noise must be > 0");
  if (!(storage_target > 0.0)) throw ConfigError("storage_target must be > 0");
  if (calib_trajectories < 1) throw ConfigError("calib_trajectories must be >= 1");
  if (!(calib_max_time > 0.0)) throw ConfigError("calib_max_time must be > 0");
  if (!(calib_dt > 0.0)) throw ConfigError("calib_dt must be > 0");
  if (!(calib_temperature > 0.0)) throw ConfigError("calib_temperature must be > 0");
  if (!(excitation_target > 0.0 && excitation_target <= 0.5))
    throw ConfigError("excitation_target must be in (0, 0.5]");
  if (oracle_n_max < 1) throw ConfigError("oracle_n_max must be >= 1");
  if (!(oracle_n_empty > 0.0)) throw ConfigError("oracle_n_empty must be > 0");
}

SimConfig parse_config_text(const std::string& text) {
  SimConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    if (val.empty()) fail(line_no, "empty value for '" + key + "'");
    if (!seen.insert(key).second) fail(line_no, "duplicate key '" + key + "'");

    if (key == "seed") {
      try {
        std::size_t pos = 0;
        // stoull silently wraps negative input, so reject signs up front.
        if (val.find_first_of("+-") != std::string::npos)
          throw std::invalid_argument("sign");
        cfg.integrator.rng_seed = std::stoull(val, &pos);
        if (pos != val.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail(line_no, "invalid value for 'seed': '" + val + "'");
      }
      continue;
    }
    if (key == "shot_noise") {
      if (val == "on")
        cfg.protocol.trigger.use_shot_noise = true;
      else if (val == "off")
        cfg.protocol.trigger.use_shot_noise = false;
      else
        fail(line_no, "shot_noise must be 'on' or 'off'");
      continue;
    }

    const IntKeySpec* ispec = nullptr;
    for (const auto& k : kIntKeys)
      if (key == k.key) {
        ispec = &k;
        break;
      }
    if (ispec) {
      const double display = parse_double(line_no, key, val);
      if (display != std::floor(display) || std::fabs(display) > 1e9)
        fail(line_no, "'" + key + "' must be an integer");
      *ispec->field(cfg) = int(display);
      continue;
    }

    const KeySpec* spec = nullptr;
    for (const auto& k : kKeys)
      if (key == k.key) {
        spec = &k;
        break;
      }
    if (!spec) fail(line_no, "unknown key '" + key + "'");
    *spec->field(cfg) = parse_double(line_no, key, val) * spec->factor;
  }
  cfg.validate();
  return cfg;
}

std::string write_config_text(const SimConfig& cfg_in) {
  SimConfig cfg = cfg_in;
  std::ostringstream out;
  out << "# cavitymc configuration: flat key = value, units in the key name\n";
  char buf[64];
  for (const auto& k : kKeys) {
    std::snprintf(buf, sizeof buf, "%.17g", *k.field(cfg) / k.factor);
    out << k.key << " = " << buf << "\n";
  }
  for (const auto& k : kIntKeys) out << k.key << " = " << *k.field(cfg) << "\n";
  out << "seed = " << cfg.integrator.rng_seed << "\n";
  out << "shot_noise = " << (cfg.protocol.trigger.use_shot_noise ? "on" : "off")
      << "\n";
  return out.str();
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void save_config(const SimConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << write_config_text(cfg);
  if (!out) throw ConfigError("failed writing config file: " + path);
}

}  // namespace cavitymc
