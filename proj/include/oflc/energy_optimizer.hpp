#pragma once

#include "oflc/linearizing_controller.hpp"
#include "oflc/machine_model.hpp"

namespace oflc {

/// Above this condition number of (I/h + Aᵀ) the costate falls back to 2h*i.
inline constexpr double kCostateConditionLimit = 1e12;
/// Below this ‖B L⁻¹ λ‖ the optimal direction is undefined and z = 0.
inline constexpr double kDegenerateDirectionThreshold = 1e-9;

struct Costate {
  Vec2 lambda = Vec2::Zero();
};

/// Linearization of the closed-loop current dynamics around the current state.
///
/// With f(i) = L⁻¹(b/‖b‖² (u - phi) + h + z) and u, z frozen,
/// A = -∂f/∂i = (u - phi) * Lambda + Gamma, so the costate obeys
/// dλ/dt = Aᵀλ - 2i.
struct CostateMatrices {
  Mat2 A = Mat2::Zero();
  Mat2 Lambda = Mat2::Zero();
  Mat2 Gamma = Mat2::Zero();
  Vec2 dphi_di = Vec2::Zero();
  Mat2 dh_di = Mat2::Zero();
};

/// Per-tick saturation and degeneracy flags.
struct SaturationReport {
  bool u_clamped = false;
  double u_original = 0.0;
  bool z_at_limit = false;
  bool z_zeroed = false;
  bool b_degenerate = false;
  bool ill_conditioned = false;

  bool operator==(const SaturationReport&) const = default;
};

Vec2 drift_gradient(const DqState& i, double omega, const MachineParams& params);
Mat2 h_jacobian(double omega, const MachineParams& params);

/// Jacobian of b(i)/‖b‖² (derived b) with respect to i; rows index the
/// components of b/‖b‖², columns index (i_d, i_q).
Mat2 normalized_channel_jacobian(const DqState& i, const MachineParams& params);

/// Throws DegenerateB if terms.b is shorter than kDegenerateBThreshold.
CostateMatrices costate_matrices(const DqState& i, double omega, double u,
                                 const LinearizationTerms& terms, const MachineParams& params);

/// Alternative closed form of the Lambda block, built on L_d and with the
/// off-diagonal signs swapped. It does not satisfy A = -∂f/∂i and is kept
/// only for comparison in tests.
Mat2 printed_lambda_matrix(const LinearizationTerms& terms, const MachineParams& params);

struct CostateEstimate {
  Costate costate;
  bool ill_conditioned = false;
};

/// One-step backward costate with zero terminal value over horizon h:
/// λ = 2 (I/h + Aᵀ)⁻¹ i.
CostateEstimate estimate_costate(const DqState& i, const Mat2& A, double horizon);

/// B = I - b bᵀ / ‖b‖². Throws DegenerateB.
Mat2 projection(const Vec2& b);

struct ClampedTorque {
  double u = 0.0;
  double u_min = 0.0;
  double u_max = 0.0;
  SaturationReport report;
};

/// Clip u to [phi - ‖b‖ v_max, phi + ‖b‖ v_max].
ClampedTorque clamp_torque_command(double u, const LinearizationTerms& terms, double v_max);

/// sqrt(v_max² - (u - phi)² / ‖b‖²). Throws NegativeDiscriminant if u lies
/// outside the feasible band by more than rounding.
double z_limit(double u_feasible, const LinearizationTerms& terms, double v_max);

struct OptimalZ {
  Vec2 z = Vec2::Zero();
  SaturationReport report;
};

/// z = -alpha_z * z_max * d / ‖d‖ with d = B L⁻¹ λ, i.e. the minimizer of
/// λᵀL⁻¹z over {z ⊥ b, ‖z‖ <= z_max} (for alpha_z = 1).
OptimalZ optimal_z(const Costate& costate, const Mat2& B, const Mat2& L_inv, double z_max,
                   double alpha_z = 1.0);

/// H = ‖i‖² + λᵀ L⁻¹ (b/‖b‖² (u - phi) + h + z).
double hamiltonian(const DqState& i, const Costate& costate, double u, const Vec2& z,
                   const LinearizationTerms& terms, double omega, const MachineParams& params);

}  // namespace oflc
