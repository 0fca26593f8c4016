#pragma once

#include <span>

#include "oflc/energy_optimizer.hpp"
#include "oflc/linearizing_controller.hpp"
#include "oflc/machine_model.hpp"

namespace oflc {

struct PiGains {
  double kp = 5.0;
  double ki = 500.0;  // 1/s

  bool operator==(const PiGains&) const = default;
};

/// PI torque loop with tau_ref feedforward:
///   u_raw = tau_ref + kp*e + ki*∫e dt,  e = tau_ref - tau_est.
/// Zero gains reduce it to the open-loop command u_raw = tau_ref.
class PiLoop {
 public:
  explicit PiLoop(PiGains gains = {});

  double update(double tau_ref, double tau_est, double dt);
  /// Undo the integration performed by the last update() (anti-windup).
  void freeze();
  void reset();

  double integral() const { return integral_; }
  const PiGains& gains() const { return gains_; }

 private:
  PiGains gains_;
  double integral_ = 0.0;
  double previous_integral_ = 0.0;
};

enum class ZChannel { kOptimal, kDisabled };

struct ControllerConfig {
  MachineParams params = MachineParams::reference();
  double v_max = 48.0;
  double dt = 1e-4;
  double horizon = 1e-3;
  PiGains gains;
  double alpha_z = 1.0;
  ZChannel z_channel = ZChannel::kOptimal;

  /// Throws ValidationError.
  void validate() const;
};

struct SensorSample {
  double t = 0.0;
  double theta = 0.0;
  double omega = 0.0;
  AbcTriple i_abc;
};

/// Everything one control tick saw and produced.
struct ControlFrame {
  double t = 0.0;
  double theta = 0.0;
  double omega = 0.0;
  AbcTriple i_abc;
  DqState i_dq;
  double tau_ref = 0.0;
  double tau_est = 0.0;
  double u_raw = 0.0;
  double u_feasible = 0.0;
  Costate lambda;
  Vec2 z = Vec2::Zero();
  DqVoltage v_dq;
  AbcTriple v_abc;
  SaturationReport report;
  double copper_loss_w = 0.0;
};

/// Feedback-linearizing torque controller with the copper-loss channel.
///
/// Per tick: dq currents from the phase currents, torque estimate and PI,
/// clamp u into the voltage-feasible band, costate, optimal z, linearizing
/// voltage, phase voltages. If b degenerates the previous dq voltage is
/// held and the frame is flagged.
class TorqueController {
 public:
  explicit TorqueController(ControllerConfig config);

  ControlFrame step(const SensorSample& sensors, double tau_ref);
  void reset();

  const ControllerConfig& config() const { return config_; }
  const PiLoop& pi() const { return pi_; }

 private:
  ControllerConfig config_;
  PiLoop pi_;
  DqVoltage held_voltage_;
};

struct StepFit {
  double mu_hat = 0.0;
  double rms_residual = 0.0;
};

/// Least-squares fit of tau(t) = u (1 - exp(-t / mu)) to a step response
/// sampled from equilibrium at t = 0. Throws PoorFit if the RMS residual
/// exceeds max_rms_fraction * |u|.
StepFit closed_loop_tf_check(std::span<const double> t, std::span<const double> tau, double u,
                             double max_rms_fraction = 1e-3);

}  // namespace oflc
