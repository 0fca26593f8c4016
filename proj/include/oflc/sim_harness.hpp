#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "oflc/machine_model.hpp"
#include "oflc/torque_loop.hpp"

namespace oflc {

struct ConstantProfile {
  double value = 0.0;
  bool operator==(const ConstantProfile&) const = default;
};

/// `before` for t < t0, `after` from t0 on.
struct StepProfile {
  double t0 = 0.0;
  double before = 0.0;
  double after = 0.0;
  bool operator==(const StepProfile&) const = default;
};

/// offset + amplitude * sin(2*pi*frequency*t + phase).
struct SinusoidProfile {
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  bool operator==(const SinusoidProfile&) const = default;
};

/// Piecewise-linear through (t, value) points sorted by t; held flat
/// outside the covered interval.
struct TableProfile {
  std::vector<std::pair<double, double>> points;
  bool operator==(const TableProfile&) const = default;
};

using Profile = std::variant<ConstantProfile, StepProfile, SinusoidProfile, TableProfile>;

double evaluate(const Profile& profile, double t);

/// Rigid shaft: J dω_m/dt = tau - tau_load(t) - friction * ω_m, with ω_m the
/// mechanical speed. The controller and plant see p * ω_m.
struct MechanicalModel {
  double inertia = 1e-3;
  double friction = 0.0;
  Profile load = ConstantProfile{};
  double initial_speed = 0.0;
  bool operator==(const MechanicalModel&) const = default;
};

/// A prescribed Profile gives electrical speed directly.
using SpeedSource = std::variant<Profile, MechanicalModel>;

struct Scenario {
  MachineParams params = MachineParams::reference();
  double duration = 0.2;
  double dt_plant = 1e-6;
  double dt_ctrl = 1e-4;
  double horizon = 1e-3;
  double v_max = 48.0;
  Profile torque_ref = ConstantProfile{};
  SpeedSource speed = Profile{ConstantProfile{}};
  DqState initial_current;
  double initial_theta = 0.0;
  PiGains gains;
  double alpha_z = 1.0;

  /// Throws ValidationError naming the field(s) at fault.
  void validate() const;
  std::size_t control_ticks() const;
  std::size_t plant_substeps() const;

  bool operator==(const Scenario&) const = default;
};

/// Mixed reference scenario: tau* = 4 sin(2*pi*5 t) N*m over 0.2 s while
/// the electrical speed ramps 0 -> 200 rad/s, holds, and ramps back to 0.
Scenario standard_scenario_s1();

enum class ControllerKind {
  kOflc,    ///< full pipeline with the optimal z channel
  kFlcZ0,   ///< same linearization with z = 0
  kIdZero,  ///< classical i_d = 0 vector control, two PI current loops
};

const char* to_string(ControllerKind kind);
/// Accepts "oflc", "flc_z0", "id_zero". Throws ValidationError.
ControllerKind parse_controller_kind(const std::string& name);

struct SaturationStats {
  std::size_t u_clamped = 0;
  std::size_t z_at_limit = 0;
  std::size_t z_zeroed = 0;
  std::size_t b_degenerate = 0;
  std::size_t ill_conditioned = 0;
};

struct RunResult {
  ControllerKind controller = ControllerKind::kOflc;
  std::vector<ControlFrame> frames;
  /// ∫‖i‖² dt and (3/2) R ∫‖i‖² dt, trapezoidal at the plant step.
  double cost_integral = 0.0;
  double copper_energy_j = 0.0;
  double rms_tracking_error = 0.0;
  SaturationStats saturation;
  bool aborted = false;
  std::string abort_reason;
};

/// Classical fourth-order Runge-Kutta step of the dq equations with v and
/// omega held over the step. Throws NonFinite.
DqState rk4_plant_step(const DqState& i, const DqVoltage& v, double omega, double dt,
                       const MachineParams& params);

/// Incremental trapezoidal integral of ‖i‖².
class EnergyAccumulator {
 public:
  explicit EnergyAccumulator(double resistance) : resistance_(resistance) {}

  void add(double t, const DqState& i);
  double cost_integral() const { return cost_; }
  double copper_energy_j() const { return 1.5 * resistance_ * cost_; }

 private:
  double resistance_;
  double cost_ = 0.0;
  double last_t_ = 0.0;
  double last_sq_ = 0.0;
  bool primed_ = false;
};

struct EnergyTotals {
  double cost_integral = 0.0;
  double copper_energy_j = 0.0;
};

/// Trapezoidal quadrature over the frames' (t, i_dq) samples.
EnergyTotals energy_accounting(std::span<const ControlFrame> frames, const MachineParams& params);

RunResult run_scenario(const Scenario& scenario, ControllerKind controller);

}  // namespace oflc
