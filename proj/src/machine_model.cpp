#include "oflc/machine_model.hpp"

#include <cmath>
#include <numbers>

#include "oflc/errors.hpp"

namespace oflc {

namespace {

void require_positive(double value, const char* field) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw ValidationError(field, "must be finite and > 0");
  }
}

constexpr double kThirdTurn = 2.0 * std::numbers::pi / 3.0;

}  // namespace

MachineParams::MachineParams(double R, double L_d, double L_q, double psi, int pole_pairs)
    : R_(R), L_d_(L_d), L_q_(L_q), psi_(psi), p_(pole_pairs) {
  require_positive(R, "R");
  require_positive(L_d, "L_d");
  require_positive(L_q, "L_q");
  require_positive(psi, "psi");
  if (pole_pairs < 1) {
    throw ValidationError("p", "must be an integer >= 1");
  }
  eta_ = L_q / L_d - 1.0;
  mu_ = L_q / R;
}

MachineParams MachineParams::reference() { return {0.5, 3e-3, 5e-3, 0.1, 4}; }

Mat2 MachineParams::inductance() const {
  Mat2 L = Mat2::Zero();
  L(0, 0) = L_d_;
  L(1, 1) = L_q_;
  return L;
}

Mat2 MachineParams::inductance_inverse() const {
  Mat2 L = Mat2::Zero();
  L(0, 0) = 1.0 / L_d_;
  L(1, 1) = 1.0 / L_q_;
  return L;
}

DqState park_clarke(double theta, const AbcTriple& abc, const MachineParams& params) {
  const double e = params.p() * theta;
  const double i_d =
      std::cos(e) * abc.a + std::cos(e - kThirdTurn) * abc.b + std::cos(e + kThirdTurn) * abc.c;
  const double i_q =
      std::sin(e) * abc.a + std::sin(e - kThirdTurn) * abc.b + std::sin(e + kThirdTurn) * abc.c;
  return {2.0 / 3.0 * i_d, 2.0 / 3.0 * i_q};
}

AbcTriple inverse_park_clarke(double theta, const DqVoltage& v, const MachineParams& params) {
  const double e = params.p() * theta;
  return {
      std::cos(e) * v.v_d + std::sin(e) * v.v_q,
      std::cos(e - kThirdTurn) * v.v_d + std::sin(e - kThirdTurn) * v.v_q,
      std::cos(e + kThirdTurn) * v.v_d + std::sin(e + kThirdTurn) * v.v_q,
  };
}

AbcTriple inverse_park_clarke(double theta, const DqState& i, const MachineParams& params) {
  return inverse_park_clarke(theta, DqVoltage{i.i_d, i.i_q}, params);
}

double torque(const DqState& i, const MachineParams& params) {
  return 1.5 * params.p() *
         (params.psi() * i.i_q + (params.L_d() - params.L_q()) * i.i_d * i.i_q);
}

Vec2 torque_gradient(const DqState& i, const MachineParams& params) {
  const double k = 1.5 * params.p();
  const double dL = params.L_d() - params.L_q();
  return {k * dL * i.i_q, k * (params.psi() + dL * i.i_d)};
}

Vec2 h_vector(const DqState& i, double omega, const MachineParams& params) {
  return {
      -params.R() * i.i_d + params.L_q() * i.i_q * omega,
      -params.R() * i.i_q + params.L_d() * i.i_d * omega - params.psi() * omega,
  };
}

Vec2 dq_dynamics(const DqState& i, const DqVoltage& v, double omega, const MachineParams& params) {
  const Vec2 rhs = h_vector(i, omega, params) + v.vec();
  return {rhs.x() / params.L_d(), rhs.y() / params.L_q()};
}

}  // namespace oflc
