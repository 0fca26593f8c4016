#include "oflc/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oflc/errors.hpp"

namespace oflc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool divides(double whole, double part) {
  const double n = whole / part;
  return std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, n) && std::round(n) >= 1.0;
}

void validate_profile(const Profile& profile, const std::string& field) {
  if (const auto* table = std::get_if<TableProfile>(&profile)) {
    if (table->points.empty()) throw ValidationError(field, "table needs at least one point");
    for (std::size_t k = 1; k < table->points.size(); ++k) {
      if (!(table->points[k].first > table->points[k - 1].first)) {
        throw ValidationError(field, "table times must be strictly increasing");
      }
    }
  }
  if (const auto* sine = std::get_if<SinusoidProfile>(&profile)) {
    if (!(sine->frequency >= 0.0)) throw ValidationError(field, "frequency must be >= 0");
  }
}

/// i_d = 0 current control with decoupling feedforward against the dq equations.
class CurrentVectorController {
 public:
  CurrentVectorController(const MachineParams& params, double v_max, double dt)
      : params_(params), v_max_(v_max), dt_(dt) {}

  ControlFrame step(const SensorSample& sensors, double tau_ref) {
    ControlFrame f;
    f.t = sensors.t;
    f.theta = sensors.theta;
    f.omega = sensors.omega;
    f.i_abc = sensors.i_abc;
    f.tau_ref = tau_ref;
    f.i_dq = park_clarke(sensors.theta, sensors.i_abc, params_);
    f.copper_loss_w = 1.5 * params_.R() * f.i_dq.vec().squaredNorm();
    f.tau_est = torque(f.i_dq, params_);
    f.u_raw = tau_ref;
    f.u_feasible = tau_ref;
    f.report.u_original = tau_ref;

    const double i_q_ref = tau_ref / (1.5 * params_.p() * params_.psi());
    const double e_d = -f.i_dq.i_d;
    const double e_q = i_q_ref - f.i_dq.i_q;
    const double w = sensors.omega;
    const double ff_d = -params_.L_q() * f.i_dq.i_q * w;
    const double ff_q = -params_.L_d() * f.i_dq.i_d * w + params_.psi() * w;

    const double int_d = integral_d_ + e_d * dt_;
    const double int_q = integral_q_ + e_q * dt_;
    Vec2 v{kBandwidth * (params_.L_d() * e_d + params_.R() * int_d) + ff_d,
           kBandwidth * (params_.L_q() * e_q + params_.R() * int_q) + ff_q};
    const double norm = v.norm();
    if (norm > v_max_) {
      v *= v_max_ / norm;
      f.report.u_clamped = true;
    } else {
      integral_d_ = int_d;
      integral_q_ = int_q;
    }
    f.v_dq = DqVoltage::from(v);
    f.v_abc = inverse_park_clarke(sensors.theta, f.v_dq, params_);
    return f;
  }

 private:
  // Closed-loop current bandwidth, rad/s (kp = L*wc, ki = R*wc).
  static constexpr double kBandwidth = 2000.0;

  MachineParams params_;
  double v_max_;
  double dt_;
  double integral_d_ = 0.0;
  double integral_q_ = 0.0;
};

}  // namespace

double evaluate(const Profile& profile, double t) {
  return std::visit(
      Overloaded{
          [](const ConstantProfile& c) { return c.value; },
          [t](const StepProfile& s) { return t < s.t0 ? s.before : s.after; },
          [t](const SinusoidProfile& s) {
            return s.offset +
                   s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * t + s.phase);
          },
          [t](const TableProfile& table) {
            const auto& pts = table.points;
            if (pts.empty()) return 0.0;
            if (t <= pts.front().first) return pts.front().second;
            if (t >= pts.back().first) return pts.back().second;
            const auto hi = std::upper_bound(
                pts.begin(), pts.end(), t,
                [](double value, const std::pair<double, double>& p) { return value < p.first; });
            const auto lo = hi - 1;
            const double s = (t - lo->first) / (hi->first - lo->first);
            return lo->second + s * (hi->second - lo->second);
          },
      },
      profile);
}

void Scenario::validate() const {
  if (!(duration > 0.0)) throw ValidationError("duration", "must be > 0");
  if (!(dt_plant > 0.0)) throw ValidationError("dt_plant", "must be > 0");
  if (!(dt_ctrl > 0.0)) throw ValidationError("dt_ctrl", "must be > 0");
  if (dt_plant > dt_ctrl) {
    throw ValidationError("dt_plant, dt_ctrl", "dt_plant must not exceed dt_ctrl");
  }
  if (!divides(dt_ctrl, dt_plant)) {
    throw ValidationError("dt_plant, dt_ctrl", "dt_plant must divide dt_ctrl");
  }
  if (!divides(duration, dt_ctrl)) {
    throw ValidationError("duration, dt_ctrl", "dt_ctrl must divide duration");
  }
  if (!(horizon > 0.0)) throw ValidationError("horizon", "must be > 0");
  if (!(v_max > 0.0)) throw ValidationError("v_max", "must be > 0");
  if (!(gains.kp >= 0.0)) throw ValidationError("kp", "must be >= 0");
  if (!(gains.ki >= 0.0)) throw ValidationError("ki", "must be >= 0");
  if (!(alpha_z > 0.0 && alpha_z <= 1.0)) throw ValidationError("alpha_z", "must be in (0, 1]");
  if (!std::isfinite(initial_current.i_d) || !std::isfinite(initial_current.i_q)) {
    throw ValidationError("i_d, i_q", "initial current must be finite");
  }
  validate_profile(torque_ref, "torque");
  if (const auto* mech = std::get_if<MechanicalModel>(&speed)) {
    if (!(mech->inertia > 0.0)) throw ValidationError("inertia", "must be > 0");
    if (!(mech->friction >= 0.0)) throw ValidationError("friction", "must be >= 0");
    validate_profile(mech->load, "load");
  } else {
    validate_profile(std::get<Profile>(speed), "speed");
  }
}

std::size_t Scenario::control_ticks() const {
  return static_cast<std::size_t>(std::llround(duration / dt_ctrl));
}

std::size_t Scenario::plant_substeps() const {
  return static_cast<std::size_t>(std::llround(dt_ctrl / dt_plant));
}

Scenario standard_scenario_s1() {
  Scenario s;
  s.duration = 0.2;
  s.torque_ref = SinusoidProfile{0.0, 4.0, 5.0, 0.0};
  s.speed = Profile{TableProfile{{{0.0, 0.0}, {0.05, 200.0}, {0.15, 200.0}, {0.2, 0.0}}}};
  return s;
}

const char* to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kOflc:
      return "oflc";
    case ControllerKind::kFlcZ0:
      return "flc_z0";
    case ControllerKind::kIdZero:
      return "id_zero";
  }
  return "?";
}

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "oflc") return ControllerKind::kOflc;
  if (name == "flc_z0") return ControllerKind::kFlcZ0;
  if (name == "id_zero") return ControllerKind::kIdZero;
  throw ValidationError("controller", "unknown controller '" + name + "'");
}

DqState rk4_plant_step(const DqState& i, const DqVoltage& v, double omega, double dt,
                       const MachineParams& params) {
  const Vec2 x = i.vec();
  const Vec2 k1 = dq_dynamics(i, v, omega, params);
  const Vec2 k2 = dq_dynamics(DqState::from(x + 0.5 * dt * k1), v, omega, params);
  const Vec2 k3 = dq_dynamics(DqState::from(x + 0.5 * dt * k2), v, omega, params);
  const Vec2 k4 = dq_dynamics(DqState::from(x + dt * k3), v, omega, params);
  const Vec2 next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw NonFinite("plant state diverged");
  }
  return DqState::from(next);
}

void EnergyAccumulator::add(double t, const DqState& i) {
  const double sq = i.vec().squaredNorm();
  if (primed_) {
    cost_ += 0.5 * (t - last_t_) * (sq + last_sq_);
  }
  last_t_ = t;
  last_sq_ = sq;
  primed_ = true;
}

EnergyTotals energy_accounting(std::span<const ControlFrame> frames, const MachineParams& params) {
  EnergyAccumulator acc(params.R());
  for (const ControlFrame& f : frames) {
    acc.add(f.t, f.i_dq);
  }
  return {acc.cost_integral(), acc.copper_energy_j()};
}

namespace {

/// (i_d, i_q, ω_m) integrated together when the shaft is modelled.
Eigen::Vector3d coupled_rhs(const Eigen::Vector3d& x, const DqVoltage& v, double t,
                            const MachineParams& params, const MechanicalModel& mech) {
  const DqState i{x(0), x(1)};
  const double omega_e = params.p() * x(2);
  const Vec2 di = dq_dynamics(i, v, omega_e, params);
  const double accel =
      (torque(i, params) - evaluate(mech.load, t) - mech.friction * x(2)) / mech.inertia;
  return {di.x(), di.y(), accel};
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, ControllerKind controller) {
  scenario.validate();
  const MachineParams& params = scenario.params;

  ControllerConfig cfg;
  cfg.params = params;
  cfg.v_max = scenario.v_max;
  cfg.dt = scenario.dt_ctrl;
  cfg.horizon = scenario.horizon;
  cfg.gains = scenario.gains;
  cfg.alpha_z = scenario.alpha_z;
  cfg.z_channel = controller == ControllerKind::kFlcZ0 ? ZChannel::kDisabled : ZChannel::kOptimal;
  TorqueController oflc(cfg);
  CurrentVectorController baseline(params, scenario.v_max, scenario.dt_ctrl);

  RunResult result;
  result.controller = controller;
  const std::size_t ticks = scenario.control_ticks();
  const std::size_t substeps = scenario.plant_substeps();
  const double dt = scenario.dt_plant;
  result.frames.reserve(ticks);

  const auto* mech = std::get_if<MechanicalModel>(&scenario.speed);
  DqState i = scenario.initial_current;
  double theta = scenario.initial_theta;
  double omega_m = mech ? mech->initial_speed : 0.0;
  auto electrical_speed = [&](double t) {
    return mech ? params.p() * omega_m : evaluate(std::get<Profile>(scenario.speed), t);
  };

  EnergyAccumulator energy(params.R());
  energy.add(0.0, i);
  double sq_error = 0.0;

  try {
    for (std::size_t k = 0; k < ticks; ++k) {
      const double t_tick = static_cast<double>(k) * scenario.dt_ctrl;
      SensorSample sensors{t_tick, theta, electrical_speed(t_tick),
                           inverse_park_clarke(theta, i, params)};
      const double tau_ref = evaluate(scenario.torque_ref, t_tick);
      ControlFrame frame = controller == ControllerKind::kIdZero ? baseline.step(sensors, tau_ref)
                                                                 : oflc.step(sensors, tau_ref);
      const DqVoltage v = frame.v_dq;

      const SaturationReport& r = frame.report;
      result.saturation.u_clamped += r.u_clamped;
      result.saturation.z_at_limit += r.z_at_limit;
      result.saturation.z_zeroed += r.z_zeroed;
      result.saturation.b_degenerate += r.b_degenerate;
      result.saturation.ill_conditioned += r.ill_conditioned;
      const double err = frame.tau_ref - frame.tau_est;
      sq_error += err * err;
      result.frames.push_back(std::move(frame));

      for (std::size_t s = 0; s < substeps; ++s) {
        const double t0 = t_tick + static_cast<double>(s) * dt;
        if (mech) {
          const Eigen::Vector3d x{i.i_d, i.i_q, omega_m};
          const Eigen::Vector3d k1 = coupled_rhs(x, v, t0, params, *mech);
          const Eigen::Vector3d k2 = coupled_rhs(x + 0.5 * dt * k1, v, t0 + 0.5 * dt, params, *mech);
          const Eigen::Vector3d k3 = coupled_rhs(x + 0.5 * dt * k2, v, t0 + 0.5 * dt, params, *mech);
          const Eigen::Vector3d k4 = coupled_rhs(x + dt * k3, v, t0 + dt, params, *mech);
          const Eigen::Vector3d next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
          if (!next.allFinite()) throw NonFinite("plant state diverged");
          theta += 0.5 * (omega_m + next(2)) * dt;
          i = {next(0), next(1)};
          omega_m = next(2);
        } else {
          const double omega = evaluate(std::get<Profile>(scenario.speed), t0);
          i = rk4_plant_step(i, v, omega, dt, params);
          theta += omega / params.p() * dt;
        }
        energy.add(t_tick + static_cast<double>(s + 1) * dt, i);
      }
    }
  } catch (const NonFinite& e) {
    result.aborted = true;
    result.abort_reason = e.what();
  }

  result.cost_integral = energy.cost_integral();
  result.copper_energy_j = energy.copper_energy_j();
  if (!result.frames.empty()) {
    result.rms_tracking_error = std::sqrt(sq_error / static_cast<double>(result.frames.size()));
  }
  return result;
}

}  // namespace oflc
