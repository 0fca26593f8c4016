#include "oflc/energy_optimizer.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <sstream>

#include "oflc/errors.hpp"

namespace oflc {

namespace {

void require_channel(const Vec2& b) {
  if (!(b.norm() >= kDegenerateBThreshold)) {
    std::ostringstream msg;
    msg << "torque channel degenerate, |b|=" << b.norm();
    throw DegenerateB(msg.str());
  }
}

}  // namespace

Vec2 drift_gradient(const DqState& i, double omega, const MachineParams& params) {
  const double k = 1.5 * params.p();
  const double eta = params.eta();
  const double Ld = params.L_d();
  const double Lq = params.L_q();
  const double mu = params.mu();
  return {
      k * (mu * omega * params.psi() + eta * Lq * i.i_q -
           2.0 * (omega / params.R()) * eta * Ld * Ld * i.i_d),
      k * (-2.0 * omega * mu * eta * Lq * i.i_q + eta * Lq * i.i_d),
  };
}

Mat2 h_jacobian(double omega, const MachineParams& params) {
  Mat2 J;
  J << -params.R(), params.L_q() * omega, params.L_d() * omega, -params.R();
  return J;
}

Mat2 normalized_channel_jacobian(const DqState& i, const MachineParams& params) {
  const Vec2 b = torque_channel(i, params);
  const double n2 = b.squaredNorm();
  const double k = 1.5 * params.p() / params.R();
  Mat2 db_di;
  db_di << 0.0, -k * params.eta() * params.L_q(), -k * params.eta() * params.L_d(), 0.0;
  const Mat2 dg_db = (Mat2::Identity() * n2 - 2.0 * b * b.transpose()) / (n2 * n2);
  return dg_db * db_di;
}

CostateMatrices costate_matrices(const DqState& i, double omega, double u,
                                 const LinearizationTerms& terms, const MachineParams& params) {
  require_channel(terms.b);
  const Mat2 L_inv = params.inductance_inverse();
  const Vec2 g = terms.b / terms.b_norm_sq;

  CostateMatrices m;
  m.dphi_di = drift_gradient(i, omega, params);
  m.dh_di = h_jacobian(omega, params);
  m.Lambda = -L_inv * normalized_channel_jacobian(i, params);
  m.Gamma = L_inv * (g * m.dphi_di.transpose() - m.dh_di);
  m.A = (u - terms.phi) * m.Lambda + m.Gamma;
  return m;
}

Mat2 printed_lambda_matrix(const LinearizationTerms& terms, const MachineParams& params) {
  const double bd = terms.b.x();
  const double bq = terms.b.y();
  const double scale = 1.5 * params.p() * params.eta() * params.L_d() /
                       (params.R() * terms.b_norm_sq * terms.b_norm_sq);
  Mat2 core;
  core << 2.0 * bd * bq, bq * bq - bd * bd, bd * bd - bq * bq, 2.0 * bd * bq;
  return scale * params.inductance_inverse() * core;
}

CostateEstimate estimate_costate(const DqState& i, const Mat2& A, double horizon) {
  const Mat2 M = Mat2::Identity() / horizon + A.transpose();
  const Eigen::JacobiSVD<Mat2> svd(M);
  const auto& sv = svd.singularValues();
  const double cond =
      sv(1) > 0.0 ? sv(0) / sv(1) : std::numeric_limits<double>::infinity();

  CostateEstimate out;
  if (!(cond <= kCostateConditionLimit)) {
    out.ill_conditioned = true;
    out.costate.lambda = 2.0 * horizon * i.vec();
    return out;
  }
  out.costate.lambda = M.partialPivLu().solve(2.0 * i.vec());
  return out;
}

Mat2 projection(const Vec2& b) {
  require_channel(b);
  // In the plane I - b bᵀ/‖b‖² = n nᵀ with n the unit normal of b; the
  // outer-product form avoids cancelling 1 - b_d²/‖b‖².
  const Vec2 n = Vec2(-b.y(), b.x()) / b.norm();
  return n * n.transpose();
}

ClampedTorque clamp_torque_command(double u, const LinearizationTerms& terms, double v_max) {
  if (!(v_max > 0.0)) {
    throw ValidationError("v_max", "must be > 0");
  }
  ClampedTorque out;
  const double span = terms.b_norm() * v_max;
  out.u_min = terms.phi - span;
  out.u_max = terms.phi + span;
  out.report.u_original = u;
  out.u = u;
  if (u > out.u_max) {
    out.u = out.u_max;
    out.report.u_clamped = true;
  } else if (u < out.u_min) {
    out.u = out.u_min;
    out.report.u_clamped = true;
  }
  return out;
}

double z_limit(double u_feasible, const LinearizationTerms& terms, double v_max) {
  const double torque_voltage = u_feasible - terms.phi;
  const double disc = v_max * v_max - torque_voltage * torque_voltage / terms.b_norm_sq;
  if (disc >= 0.0) {
    return std::sqrt(disc);
  }
  // Rounding at the band edge.
  if (disc >= -1e-9 * v_max * v_max) {
    return 0.0;
  }
  std::ostringstream msg;
  msg << "u=" << u_feasible << " outside feasible band, discriminant " << disc;
  throw NegativeDiscriminant(msg.str());
}

OptimalZ optimal_z(const Costate& costate, const Mat2& B, const Mat2& L_inv, double z_max,
                   double alpha_z) {
  OptimalZ out;
  // B is a rank-one projector n nᵀ. Projecting through n keeps d exactly on
  // the line of n even when L⁻¹λ is nearly parallel to b.
  const Eigen::Index col = B(0, 0) >= B(1, 1) ? 0 : 1;
  if (!(B(col, col) > 0.0)) {
    out.report.z_zeroed = true;
    return out;
  }
  const Vec2 n = B.col(col) / std::sqrt(B(col, col));
  const Vec2 d = n * n.dot(L_inv * costate.lambda);
  const double d_norm = d.norm();
  if (!(d_norm >= kDegenerateDirectionThreshold)) {
    out.report.z_zeroed = true;
    return out;
  }
  out.report.z_at_limit = true;
  if (z_max <= 0.0) {
    return out;
  }
  out.z = -(alpha_z * z_max / d_norm) * d;
  return out;
}

double hamiltonian(const DqState& i, const Costate& costate, double u, const Vec2& z,
                   const LinearizationTerms& terms, double omega, const MachineParams& params) {
  const Vec2 drive = terms.b * ((u - terms.phi) / terms.b_norm_sq) + h_vector(i, omega, params) + z;
  return i.vec().squaredNorm() + costate.lambda.dot(params.inductance_inverse() * drive);
}

}  // namespace oflc
