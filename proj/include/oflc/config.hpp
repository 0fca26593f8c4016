#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oflc/sim_harness.hpp"

namespace oflc {

/// Run-level settings that sit next to a Scenario.
struct RunConfig {
  std::string scenario_path;
  std::vector<ControllerKind> controllers{ControllerKind::kOflc};
  std::string out_dir = ".";
  int decimation = 1;

  std::optional<double> v_max;
  std::optional<double> horizon;
  std::optional<double> kp;
  std::optional<double> ki;
  std::optional<double> alpha_z;

  bool operator==(const RunConfig&) const = default;
};

struct ParsedConfig {
  Scenario scenario;
  RunConfig run;
};

/// Parses an INI-style scenario document:
///
///   [machine]    R, L_d, L_q, psi, p                    (required)
///   [timing]     duration, dt_plant, dt_ctrl, horizon
///   [limits]     v_max
///   [torque]     profile = constant|step|sinusoid|table (required) + profile keys
///   [speed]      source = prescribed|mechanical, profile keys when prescribed,
///                inertia, friction, initial_speed when mechanical
///   [load]       profile keys (mechanical source only)
///   [initial]    i_d, i_q, theta
///   [controller] kp, ki, alpha_z
///   [run]        controllers (comma list), decimation
///
/// Profile keys: constant -> value; step -> t0, before, after;
/// sinusoid -> offset, amplitude, frequency, phase;
/// table -> points = t:v, t:v, ...
///
/// Throws ParseError (syntax, unknown keys) or ValidationError (bad values;
/// the message carries the line numbers of the fields involved).
ParsedConfig parse_config(std::string_view text);

/// Canonical text form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const Scenario& scenario, const RunConfig& run);

/// Copies the set overrides into the scenario, then revalidates it.
void apply_overrides(Scenario& scenario, const RunConfig& run);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace oflc
