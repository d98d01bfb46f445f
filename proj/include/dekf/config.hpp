#pragma once

// Experiment configuration: JSON-loadable, schema-checked (unknown keys are
// rejected), plus the shipped presets.

#include <string>
#include <vector>

#include "json.hpp"

#include "dekf/errors.hpp"

namespace dekf {

struct ExperimentConfig {
  std::string name = "custom";
  unsigned long long seed = 1;
  std::string output_dir = "out";

  // Phases.
  bool identify = false;        // run relay identification before the flight
  std::string keyset_dir;       // load prebuilt keysets from here when set
  bool flight = true;           // run the scripted flight phase

  // Trajectory.
  std::string trajectory = "fig8";  // fig8 | ramp | hover
  double duration = 20.0;           // [s] flight time after settling
  double settle_time = 3.0;         // [s] hover hold before the trajectory
  double fig8_size = 1.0;           // [m]
  double fig8_period = 12.0;        // [s]
  double altitude = 1.0;            // [m]
  double ramp_speed = 0.5;          // [m/s]
  double ramp_duration = 2.0;       // [s]

  // Sensing / feedback.
  double position_rate_hz = 300.0;
  double noise_scale = 1.0;
  bool raw_feedback = false;       // control loop fed by raw sensors, not filters
  bool open_loop_shadow = false;   // log a prediction-only translational filter

  // Control.
  std::string altitude_controller = "pdd";  // pd | pdd

  // Identification settings (used when identify=true).
  double mrft_h_att = 1.2;
  double mrft_h_alt = 8.0;
  double mrft_h_lat = 0.05;
  double mrft_beta_soiptd = -0.73;
  double mrft_beta_foiptd = 0.73;

  // Metrics.
  double snr_cutoff_hz = 5.0;

  void validate() const {
    if (duration <= 0.0 || settle_time < 0.0) {
      throw ConfigError("ExperimentConfig: bad duration/settle_time");
    }
    if (trajectory != "fig8" && trajectory != "ramp" && trajectory != "hover") {
      throw ConfigError("ExperimentConfig: unknown trajectory '" + trajectory +
                        "'");
    }
    if (altitude_controller != "pd" && altitude_controller != "pdd") {
      throw ConfigError("ExperimentConfig: altitude_controller must be pd|pdd");
    }
    if (position_rate_hz <= 0.0 || noise_scale < 0.0) {
      throw ConfigError("ExperimentConfig: bad sensing parameters");
    }
    if (fig8_size <= 0.0 || fig8_period <= 0.0 || ramp_duration <= 0.0) {
      throw ConfigError("ExperimentConfig: bad trajectory shape");
    }
  }
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {
      "name",           "seed",           "output_dir",
      "identify",       "keyset_dir",     "flight",
      "trajectory",     "duration",       "settle_time",
      "fig8_size",      "fig8_period",    "altitude",
      "ramp_speed",     "ramp_duration",  "position_rate_hz",
      "noise_scale",    "raw_feedback",   "open_loop_shadow",
      "altitude_controller",              "mrft_h_att",
      "mrft_h_alt",     "mrft_h_lat",     "mrft_beta_soiptd",
      "mrft_beta_foiptd",                 "snr_cutoff_hz"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : known) ok = ok || k == it.key();
    if (!ok) throw ConfigError("unknown config key: " + it.key());
  }
  ExperimentConfig c;
  auto get = [&](const char* k, auto& field) {
    if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
  };
  get("name", c.name);
  get("seed", c.seed);
  get("output_dir", c.output_dir);
  get("identify", c.identify);
  get("keyset_dir", c.keyset_dir);
  get("flight", c.flight);
  get("trajectory", c.trajectory);
  get("duration", c.duration);
  get("settle_time", c.settle_time);
  get("fig8_size", c.fig8_size);
  get("fig8_period", c.fig8_period);
  get("altitude", c.altitude);
  get("ramp_speed", c.ramp_speed);
  get("ramp_duration", c.ramp_duration);
  get("position_rate_hz", c.position_rate_hz);
  get("noise_scale", c.noise_scale);
  get("raw_feedback", c.raw_feedback);
  get("open_loop_shadow", c.open_loop_shadow);
  get("altitude_controller", c.altitude_controller);
  get("mrft_h_att", c.mrft_h_att);
  get("mrft_h_alt", c.mrft_h_alt);
  get("mrft_h_lat", c.mrft_h_lat);
  get("mrft_beta_soiptd", c.mrft_beta_soiptd);
  get("mrft_beta_foiptd", c.mrft_beta_foiptd);
  get("snr_cutoff_hz", c.snr_cutoff_hz);
  c.validate();
  return c;
}

inline ExperimentConfig preset_config(const std::string& preset) {
  ExperimentConfig c;
  c.name = preset;
  if (preset == "fig8-300hz") {
    c.trajectory = "fig8";
    c.position_rate_hz = 300.0;
  } else if (preset == "fig8-10hz") {
    c.trajectory = "fig8";
    c.position_rate_hz = 10.0;
  } else if (preset == "fig8-openloop") {
    c.trajectory = "fig8";
    c.open_loop_shadow = true;
  } else if (preset == "fig8-raw") {
    c.trajectory = "fig8";
    c.raw_feedback = true;
  } else if (preset == "ramp-pd") {
    c.trajectory = "ramp";
    c.altitude_controller = "pd";
    c.duration = 8.0;
  } else if (preset == "ramp-pdd") {
    c.trajectory = "ramp";
    c.altitude_controller = "pdd";
    c.duration = 8.0;
  } else if (preset == "identify-all") {
    c.identify = true;
    c.flight = true;
    c.trajectory = "fig8";
    c.duration = 10.0;
  } else {
    throw ConfigError("unknown preset: " + preset);
  }
  return c;
}

inline std::vector<std::string> preset_names() {
  return {"fig8-300hz", "fig8-10hz",    "fig8-openloop", "fig8-raw",
          "ramp-pd",    "ramp-pdd",     "identify-all"};
}

}  // namespace dekf
