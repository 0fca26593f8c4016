#include "oflc/linearizing_controller.hpp"

#include <cmath>
#include <sstream>

#include "oflc/errors.hpp"

namespace oflc {

double LinearizationTerms::b_norm() const { return std::sqrt(b_norm_sq); }

Vec2 torque_channel(const DqState& i, const MachineParams& params, TorqueChannelForm form) {
  const double k = 1.5 * params.p() / params.R();
  const double d_axis_inductance =
      form == TorqueChannelForm::kDerived ? params.L_q() : params.L_d();
  return {
      -k * params.eta() * d_axis_inductance * i.i_q,
      k * (params.psi() - params.eta() * params.L_d() * i.i_d),
  };
}

double torque_drift(const DqState& i, double omega, const MachineParams& params) {
  const double k = 1.5 * params.p();
  const double eta = params.eta();
  const double Ld = params.L_d();
  const double Lq = params.L_q();
  const double psi = params.psi();
  const double speed_part = Lq * i.i_d * psi - eta * Lq * Lq * i.i_q * i.i_q -
                            eta * Ld * Ld * i.i_d * i.i_d - psi * psi;
  return k * (omega / params.R()) * speed_part + k * eta * Lq * i.i_d * i.i_q;
}

LinearizationTerms compute_terms(const DqState& i, double omega, const MachineParams& params,
                                 TorqueChannelForm form) {
  LinearizationTerms terms;
  terms.b = torque_channel(i, params, form);
  terms.b_norm_sq = terms.b.x() * terms.b.x() + terms.b.y() * terms.b.y();
  if (!(std::sqrt(terms.b_norm_sq) >= kDegenerateBThreshold)) {
    std::ostringstream msg;
    msg << "torque channel degenerate at i=(" << i.i_d << ", " << i.i_q
        << "), |b|=" << std::sqrt(terms.b_norm_sq);
    throw DegenerateB(msg.str());
  }
  terms.phi = torque_drift(i, omega, params);
  return terms;
}

DqVoltage linearize(double u, const Vec2& z, const LinearizationTerms& terms) {
  const double bz = terms.b.dot(z);
  if (std::abs(bz) > kOrthogonalityTolerance * terms.b_norm() * z.norm()) {
    std::ostringstream msg;
    msg << "z not orthogonal to b: bᵀz=" << bz;
    throw OrthogonalityViolation(msg.str());
  }
  return DqVoltage::from(terms.b * ((u - terms.phi) / terms.b_norm_sq) + z);
}

double torque_rate_identity_residual(const DqState& i, double tau_dot, const DqVoltage& v,
                                     double omega, const MachineParams& params,
                                     TorqueChannelForm form) {
  const Vec2 b = torque_channel(i, params, form);
  const double phi = torque_drift(i, omega, params);
  return (torque(i, params) + params.mu() * tau_dot) - (b.dot(v.vec()) + phi);
}

}  // namespace oflc
