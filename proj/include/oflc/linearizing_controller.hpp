#pragma once

#include "oflc/machine_model.hpp"

namespace oflc {

/// Below this ‖b‖ the torque channel is treated as uncontrollable.
inline constexpr double kDegenerateBThreshold = 1e-6;
/// Relative tolerance on bᵀz for the orthogonality precondition of linearize().
inline constexpr double kOrthogonalityTolerance = 1e-9;

/// Which expression to use for the d-axis component of b.
///
/// kDerived comes from substituting the dq equations into the torque
/// derivative and is the one that makes tau + mu*dtau/dt = bᵀv + phi hold:
///   b_d = -(3p / 2R) * eta * L_q * i_q.
/// kPrinted uses L_d in place of L_q. It exists only so tests can show the
/// identity residual it leaves behind; controllers always use kDerived.
enum class TorqueChannelForm { kDerived, kPrinted };

/// Terms of the torque-rate identity tau + mu*dtau/dt = bᵀv + phi.
struct LinearizationTerms {
  Vec2 b = Vec2::Zero();
  double phi = 0.0;
  double b_norm_sq = 0.0;

  double b_norm() const;
};

/// Torque-channel direction b(i), N*m per volt.
Vec2 torque_channel(const DqState& i, const MachineParams& params,
                    TorqueChannelForm form = TorqueChannelForm::kDerived);

/// Drift term phi(i, omega), N*m.
double torque_drift(const DqState& i, double omega, const MachineParams& params);

/// Throws DegenerateB when ‖b‖ < kDegenerateBThreshold.
LinearizationTerms compute_terms(const DqState& i, double omega, const MachineParams& params,
                                 TorqueChannelForm form = TorqueChannelForm::kDerived);

/// v = b (u - phi) / ‖b‖² + z.
///
/// z must be orthogonal to b; throws OrthogonalityViolation if
/// |bᵀz| > kOrthogonalityTolerance * ‖b‖ * ‖z‖.
DqVoltage linearize(double u, const Vec2& z, const LinearizationTerms& terms);

/// (tau + mu * tau_dot) - (bᵀv + phi) at state i, where tau_dot is an
/// externally supplied (typically finite-difference) torque rate.
double torque_rate_identity_residual(const DqState& i, double tau_dot, const DqVoltage& v,
                                     double omega, const MachineParams& params,
                                     TorqueChannelForm form = TorqueChannelForm::kDerived);

}  // namespace oflc
