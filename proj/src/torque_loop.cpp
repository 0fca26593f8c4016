#include "oflc/torque_loop.hpp"

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <sstream>
#include <utility>

#include "oflc/errors.hpp"

namespace oflc {

PiLoop::PiLoop(PiGains gains) : gains_(gains) {
  if (!(gains.kp >= 0.0)) throw ValidationError("kp", "must be >= 0");
  if (!(gains.ki >= 0.0)) throw ValidationError("ki", "must be >= 0");
}

double PiLoop::update(double tau_ref, double tau_est, double dt) {
  const double e = tau_ref - tau_est;
  previous_integral_ = integral_;
  integral_ += e * dt;
  return tau_ref + gains_.kp * e + gains_.ki * integral_;
}

void PiLoop::freeze() { integral_ = previous_integral_; }

void PiLoop::reset() {
  integral_ = 0.0;
  previous_integral_ = 0.0;
}

void ControllerConfig::validate() const {
  if (!(v_max > 0.0)) throw ValidationError("v_max", "must be > 0");
  if (!(dt > 0.0)) throw ValidationError("dt_ctrl", "must be > 0");
  if (!(horizon > 0.0)) throw ValidationError("horizon", "must be > 0");
  if (!(gains.kp >= 0.0)) throw ValidationError("kp", "must be >= 0");
  if (!(gains.ki >= 0.0)) throw ValidationError("ki", "must be >= 0");
  if (!(alpha_z > 0.0 && alpha_z <= 1.0)) throw ValidationError("alpha_z", "must be in (0, 1]");
}

TorqueController::TorqueController(ControllerConfig config)
    : config_(std::move(config)), pi_(config_.gains) {
  config_.validate();
}

void TorqueController::reset() {
  pi_.reset();
  held_voltage_ = {};
}

ControlFrame TorqueController::step(const SensorSample& sensors, double tau_ref) {
  const MachineParams& params = config_.params;
  ControlFrame f;
  f.t = sensors.t;
  f.theta = sensors.theta;
  f.omega = sensors.omega;
  f.i_abc = sensors.i_abc;
  f.tau_ref = tau_ref;

  f.i_dq = park_clarke(sensors.theta, sensors.i_abc, params);
  f.copper_loss_w = 1.5 * params.R() * f.i_dq.vec().squaredNorm();

  f.tau_est = torque(f.i_dq, params);
  f.u_raw = pi_.update(tau_ref, f.tau_est, config_.dt);
  f.report.u_original = f.u_raw;

  LinearizationTerms terms;
  try {
    terms = compute_terms(f.i_dq, sensors.omega, params);
  } catch (const DegenerateB&) {
    pi_.freeze();
    f.report.b_degenerate = true;
    f.u_feasible = f.u_raw;
    f.v_dq = held_voltage_;
    f.v_abc = inverse_park_clarke(sensors.theta, f.v_dq, params);
    return f;
  }

  const ClampedTorque clamped = clamp_torque_command(f.u_raw, terms, config_.v_max);
  f.u_feasible = clamped.u;
  f.report.u_clamped = clamped.report.u_clamped;
  if (clamped.report.u_clamped) {
    pi_.freeze();
  }

  const CostateMatrices m = costate_matrices(f.i_dq, sensors.omega, f.u_feasible, terms, params);
  const CostateEstimate est = estimate_costate(f.i_dq, m.A, config_.horizon);
  f.lambda = est.costate;
  f.report.ill_conditioned = est.ill_conditioned;

  if (config_.z_channel == ZChannel::kOptimal) {
    const double z_max = z_limit(f.u_feasible, terms, config_.v_max);
    const OptimalZ opt = optimal_z(f.lambda, projection(terms.b), params.inductance_inverse(),
                                   z_max, config_.alpha_z);
    f.z = opt.z;
    f.report.z_at_limit = opt.report.z_at_limit;
    f.report.z_zeroed = opt.report.z_zeroed;
  }

  f.v_dq = linearize(f.u_feasible, f.z, terms);
  f.v_abc = inverse_park_clarke(sensors.theta, f.v_dq, params);
  held_voltage_ = f.v_dq;
  return f;
}

StepFit closed_loop_tf_check(std::span<const double> t, std::span<const double> tau, double u,
                             double max_rms_fraction) {
  if (t.size() != tau.size() || t.size() < 3) {
    throw PoorFit("step response needs >= 3 paired samples");
  }
  if (u == 0.0) {
    throw PoorFit("step amplitude is zero");
  }
  auto sse = [&](double log_mu) {
    const double mu = std::exp(log_mu);
    double s = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double r = tau[k] - u * (1.0 - std::exp(-t[k] / mu));
      s += r * r;
    }
    return s;
  };
  const double t_span = t.back() - t.front();
  const auto [log_mu, best] = boost::math::tools::brent_find_minima(
      sse, std::log(t_span * 1e-4), std::log(t_span * 1e2), 52);

  StepFit fit;
  fit.mu_hat = std::exp(log_mu);
  fit.rms_residual = std::sqrt(best / static_cast<double>(t.size()));
  if (fit.rms_residual > max_rms_fraction * std::abs(u)) {
    std::ostringstream msg;
    msg << "first-order fit residual " << fit.rms_residual << " exceeds "
        << max_rms_fraction * std::abs(u);
    throw PoorFit(msg.str());
  }
  return fit;
}

}  // namespace oflc
