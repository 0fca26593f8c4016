#pragma once

#include <Eigen/Core>

namespace oflc {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Stator currents in the rotor (dq) frame, amperes.
struct DqState {
  double i_d = 0.0;
  double i_q = 0.0;

  Vec2 vec() const { return {i_d, i_q}; }
  static DqState from(const Vec2& v) { return {v.x(), v.y()}; }
  bool operator==(const DqState&) const = default;
};

/// Stator voltages in the rotor (dq) frame, volts.
struct DqVoltage {
  double v_d = 0.0;
  double v_q = 0.0;

  Vec2 vec() const { return {v_d, v_q}; }
  static DqVoltage from(const Vec2& v) { return {v.x(), v.y()}; }
  bool operator==(const DqVoltage&) const = default;
};

/// Per-phase quantity (current or voltage). Balanced sets sum to zero;
/// nothing here enforces that.
struct AbcTriple {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  bool operator==(const AbcTriple&) const = default;
};

/// Electrical constants of a salient-pole PMSM.
///
/// Speed convention: every `omega` argument in this library is the
/// *electrical* speed (rad/s) that appears in the dq voltage equations.
/// Angles `theta` are mechanical; the transforms use the electrical angle
/// p*theta, so d(theta)/dt = omega / p.
class MachineParams {
 public:
  /// Throws ValidationError naming the offending field.
  MachineParams(double R, double L_d, double L_q, double psi, int pole_pairs);

  /// Reference machine used by examples and tests: p=4, R=0.5 ohm,
  /// L_d=3 mH, L_q=5 mH, psi=0.1 Wb.
  static MachineParams reference();

  double R() const { return R_; }
  double L_d() const { return L_d_; }
  double L_q() const { return L_q_; }
  double psi() const { return psi_; }
  int p() const { return p_; }
  /// L_q / L_d - 1.
  double eta() const { return eta_; }
  /// L_q / R, seconds.
  double mu() const { return mu_; }

  Mat2 inductance() const;
  Mat2 inductance_inverse() const;

  bool operator==(const MachineParams&) const = default;

 private:
  double R_;
  double L_d_;
  double L_q_;
  double psi_;
  int p_;
  double eta_;
  double mu_;
};

/// Park-Clarke transform K(theta)*abc with the 2/3 amplitude-invariant scaling.
DqState park_clarke(double theta, const AbcTriple& abc, const MachineParams& params);

/// Right inverse of park_clarke: park_clarke(theta, inverse_park_clarke(theta, v)) == v.
AbcTriple inverse_park_clarke(double theta, const DqVoltage& v, const MachineParams& params);
AbcTriple inverse_park_clarke(double theta, const DqState& i, const MachineParams& params);

/// Electromagnetic torque, N*m.
double torque(const DqState& i, const MachineParams& params);

/// Gradient of torque() with respect to (i_d, i_q).
Vec2 torque_gradient(const DqState& i, const MachineParams& params);

/// Time derivative of the dq currents under voltage v at electrical speed omega.
Vec2 dq_dynamics(const DqState& i, const DqVoltage& v, double omega, const MachineParams& params);

/// Voltage-free part of the dq equations: L * di/dt = h + v.
Vec2 h_vector(const DqState& i, double omega, const MachineParams& params);

}  // namespace oflc
