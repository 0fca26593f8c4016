// Acceptance runner: one [PASS]/[FAIL] line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oflc/cli.hpp"
#include "oflc/energy_optimizer.hpp"
#include "oflc/errors.hpp"
#include "oflc/sim_harness.hpp"
#include "support/oracles.hpp"

namespace {

using namespace oflc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const MachineParams P0 = MachineParams::reference();

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Frames from every OFLC/FLC_z0 run, audited by criteria 3 and 4.
struct FrameAudit {
  double worst_orthogonality = 0.0;  // |bᵀz| / (‖b‖‖z‖)
  double worst_voltage = 0.0;        // ‖v‖ / v_max
  std::size_t frames = 0;
  std::size_t clamped = 0;

  void add(const RunResult& r, const Scenario& s) {
    for (const ControlFrame& f : r.frames) {
      ++frames;
      clamped += f.report.u_clamped;
      worst_voltage = std::max(worst_voltage, f.v_dq.vec().norm() / s.v_max);
      if (f.report.b_degenerate || f.z.norm() == 0.0) continue;
      const Vec2 b = compute_terms(f.i_dq, f.omega, s.params).b;
      worst_orthogonality =
          std::max(worst_orthogonality, std::abs(b.dot(f.z)) / (b.norm() * f.z.norm()));
    }
  }
};

FrameAudit audit;

RunResult audited_run(const Scenario& s, ControllerKind kind) {
  RunResult r = run_scenario(s, kind);
  if (kind != ControllerKind::kIdZero) audit.add(r, s);
  return r;
}

// --- 1 and 7 ---------------------------------------------------------------

Outcome exact_linearization(double& derived_residual, double& printed_residual) {
  const auto start = Clock::now();
  oflc::testing::StateSampler rng(101);
  double worst = 0.0;
  std::size_t samples = 0;
  derived_residual = printed_residual = 0.0;
  bool aborted = false;
  for (int run = 0; run < 10; ++run) {
    Scenario s;
    s.duration = 0.02;
    s.dt_plant = 1e-5;
    s.dt_ctrl = 1e-5;
    s.gains = {0.0, 0.0};  // open loop: u = τ*
    s.torque_ref = SinusoidProfile{rng.uniform(-3, 3), rng.uniform(0, 8), rng.uniform(5, 80),
                                   rng.uniform(0, 6)};
    s.speed = Profile{SinusoidProfile{rng.speed(250), rng.uniform(0, 50), rng.uniform(1, 20), 0}};
    s.initial_current = DqState::from(rng.current(8.0));
    s.initial_theta = rng.uniform(0, 6);
    const RunResult r = audited_run(s, ControllerKind::kOflc);
    aborted |= r.aborted;

    const double delta = 1e-7;
    for (const ControlFrame& f : r.frames) {
      if (f.report.u_clamped || f.report.b_degenerate) continue;
      // Local central difference of τ along the plant with the frame's voltage held.
      const DqState fwd = rk4_plant_step(f.i_dq, f.v_dq, f.omega, delta, s.params);
      const DqState back = rk4_plant_step(f.i_dq, f.v_dq, f.omega, -delta, s.params);
      const double tau_dot = (torque(fwd, s.params) - torque(back, s.params)) / (2 * delta);
      const double res = torque(f.i_dq, s.params) + s.params.mu() * tau_dot - f.u_feasible;
      worst = std::max(worst, std::abs(res) / std::max(1.0, std::abs(f.u_feasible)));
      derived_residual = std::max(
          derived_residual, std::abs(torque_rate_identity_residual(
                                f.i_dq, tau_dot, f.v_dq, f.omega, s.params,
                                TorqueChannelForm::kDerived)));
      printed_residual = std::max(
          printed_residual, std::abs(torque_rate_identity_residual(
                                f.i_dq, tau_dot, f.v_dq, f.omega, s.params,
                                TorqueChannelForm::kPrinted)));
      ++samples;
    }
  }
  const double elapsed = seconds_since(start);
  return {!aborted && samples > 0 && worst <= 1e-3 && elapsed < 30.0,
          "max |τ+μτ̇−u|/max(1,|u|)=" + fmt(worst) + " over " + std::to_string(samples) +
              " unsaturated ticks, " + fmt(elapsed) + " s"};
}

// --- 2 ---------------------------------------------------------------------

/// Largest torque difference between the z-enabled and z-disabled step responses.
double z_gap(const RunResult& on, const RunResult& off) {
  double gap = 0.0;
  for (std::size_t k = 0; k < on.frames.size(); ++k) {
    gap = std::max(gap, std::abs(on.frames[k].tau_est - off.frames[k].tau_est));
  }
  return gap;
}

Outcome transfer_function() {
  Scenario s;
  s.duration = 0.05;
  s.dt_plant = 1e-7;
  s.dt_ctrl = 1e-7;
  s.gains = {0.0, 0.0};
  s.torque_ref = ConstantProfile{6.0};
  const RunResult on = audited_run(s, ControllerKind::kOflc);
  const RunResult off = audited_run(s, ControllerKind::kFlcZ0);

  std::vector<double> t, tau;
  for (const ControlFrame& f : on.frames) {
    t.push_back(f.t);
    tau.push_back(f.tau_est);
  }
  const double gap = z_gap(on, off);

  // Same test ten times coarser, to show how the gap scales with the hold.
  Scenario coarse = s;
  coarse.dt_plant = coarse.dt_ctrl = 1e-6;
  const double coarse_gap = z_gap(run_scenario(coarse, ControllerKind::kOflc),
                                  run_scenario(coarse, ControllerKind::kFlcZ0));
  const double mu = P0.mu();
  double mu_hat = NAN;
  try {
    mu_hat = closed_loop_tf_check(t, tau, 6.0).mu_hat;
  } catch (const PoorFit&) {
  }
  const std::size_t at_mu = static_cast<std::size_t>(std::llround(mu / s.dt_ctrl));
  const double expected = 6.0 * (1.0 - std::exp(-1.0));
  const double tau_mu = tau.at(at_mu);

  const bool fit_ok = std::abs(mu_hat - mu) <= 0.01 * mu;
  const bool tau_ok = std::abs(tau_mu - expected) <= 0.01 * expected;
  const bool gap_ok = gap <= 1e-6;
  return {fit_ok && tau_ok && gap_ok && !on.aborted && !off.aborted,
          "μ̂=" + fmt(mu_hat, 6) + " s vs " + fmt(mu, 6) + " (" + (fit_ok ? "ok" : "off") +
              "), τ(μ)=" + fmt(tau_mu, 6) + " vs " + fmt(expected, 6) + " (" +
              (tau_ok ? "ok" : "off") + "), max |τ_z−τ_z0|=" + fmt(gap) +
              " N·m at dt_ctrl=1e-7 s, " + fmt(coarse_gap) + " at 1e-6 s (" +
              (gap_ok ? "ok" : "bound 1e-6") + ")"};
}

// --- 4 (extra load on the clamp) -------------------------------------------

void infeasible_demands() {
  Scenario s;
  s.duration = 0.05;
  s.torque_ref = StepProfile{0.01, 0.0, 200.0};
  s.speed = Profile{ConstantProfile{250.0}};
  audited_run(s, ControllerKind::kOflc);
  audited_run(s, ControllerKind::kFlcZ0);
  s.torque_ref = SinusoidProfile{0.0, 150.0, 30.0, 0.0};
  s.speed = Profile{TableProfile{{{0.0, -300.0}, {0.05, 300.0}}}};
  audited_run(s, ControllerKind::kOflc);
}

// --- 5 ---------------------------------------------------------------------

Outcome minimum_principle() {
  const auto start = Clock::now();
  oflc::testing::StateSampler rng(103);
  const Mat2 L_inv = P0.inductance_inverse();
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const DqState i = DqState::from(rng.current());
    const double omega = rng.speed();
    const LinearizationTerms t = compute_terms(i, omega, P0);
    const double u = clamp_torque_command(rng.uniform(-80, 80), t, 48.0).u;
    const CostateMatrices m = costate_matrices(i, omega, u, t, P0);
    const Costate lam = estimate_costate(i, m.A, 1e-3).costate;
    const double z_max = z_limit(u, t, 48.0);
    const Vec2 z = optimal_z(lam, projection(t.b), L_inv, z_max).z;

    const Vec2 n = Vec2(-t.b.y(), t.b.x()) / t.b_norm();
    double best = INFINITY;
    for (int j = 0; j <= 2000; ++j) {
      const double s = z_max * (-1.0 + j / 1000.0);
      best = std::min(best, hamiltonian(i, lam, u, s * n, t, omega, P0));
    }
    const double h = hamiltonian(i, lam, u, z, t, omega, P0);
    worst = std::max(worst, (h - best) / std::max(1.0, std::abs(best)));
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-6 && elapsed < 5.0,
          "max (H(z*)−min H)/|H|=" + fmt(worst) + ", " + fmt(elapsed) + " s"};
}

// --- 6 ---------------------------------------------------------------------

Outcome jacobian_checks() {
  oflc::testing::StateSampler rng(107);
  double worst_A = 0.0, worst_phi = 0.0, worst_h = 0.0;
  int checked = 0;
  while (checked < 500) {
    const Vec2 x = rng.current();
    const double omega = rng.speed();
    const DqState i = DqState::from(x);
    const LinearizationTerms t = compute_terms(i, omega, P0);
    if (t.b_norm() < 0.05) continue;
    const double u = t.phi + rng.uniform(-1, 1) * t.b_norm() * 48.0;
    const Vec2 z = rng.uniform(-20, 20) * Vec2(-t.b.y(), t.b.x()) / t.b_norm();
    const CostateMatrices m = costate_matrices(i, omega, u, t, P0);

    const auto f = [&](const Vec2& s) {
      const DqState is = DqState::from(s);
      const LinearizationTerms ts = compute_terms(is, omega, P0);
      return Vec2(P0.inductance_inverse() * (ts.b * ((u - ts.phi) / ts.b_norm_sq) +
                                             h_vector(is, omega, P0) + z));
    };
    const Mat2 fd_A = -oflc::testing::central_jacobian(f, x, 1e-5);
    const Vec2 fd_phi = oflc::testing::central_gradient(
        [&](const Vec2& s) { return torque_drift(DqState::from(s), omega, P0); }, x);
    const Mat2 fd_h = oflc::testing::central_jacobian(
        [&](const Vec2& s) { return h_vector(DqState::from(s), omega, P0); }, x);
    worst_A = std::max(worst_A, (m.A - fd_A).norm() / fd_A.norm());
    worst_phi = std::max(worst_phi, (m.dphi_di - fd_phi).norm() / std::max(1e-12, fd_phi.norm()));
    worst_h = std::max(worst_h, (m.dh_di - fd_h).norm() / fd_h.norm());
    ++checked;
  }
  return {worst_A <= 1e-5 && worst_phi <= 1e-6 && worst_h <= 1e-6,
          "A " + fmt(worst_A) + ", ∂φ/∂i " + fmt(worst_phi) + ", ∂h/∂i " + fmt(worst_h) +
              " (relative, 500 states)"};
}

// --- 8 ---------------------------------------------------------------------

Outcome energy_saving() {
  const Scenario s = standard_scenario_s1();
  const RunResult oflc = audited_run(s, ControllerKind::kOflc);
  const RunResult flc = audited_run(s, ControllerKind::kFlcZ0);
  const RunResult idz = audited_run(s, ControllerKind::kIdZero);
  const double ratio = oflc.cost_integral / flc.cost_integral;
  return {!oflc.aborted && !flc.aborted && oflc.cost_integral <= flc.cost_integral,
          "S1 cost OFLC " + fmt(oflc.cost_integral) + ", FLC_z0 " + fmt(flc.cost_integral) +
              ", ID_ZERO " + fmt(idz.cost_integral) + " A²s; ratio OFLC/FLC_z0 " + fmt(ratio)};
}

// --- 9 ---------------------------------------------------------------------

Outcome non_salient() {
  Scenario s;
  s.params = MachineParams(0.5, 5e-3, 5e-3, 0.1, 4);
  s.duration = 0.2;
  s.dt_plant = 1e-6;
  s.dt_ctrl = 1e-6;
  s.torque_ref = ConstantProfile{4.0};
  s.speed = Profile{ConstantProfile{100.0}};
  const RunResult r = audited_run(s, ControllerKind::kOflc);
  const double settle = 10.0 * s.params.mu();
  double worst = 0.0;
  for (const ControlFrame& f : r.frames) {
    if (f.t >= settle) worst = std::max(worst, std::abs(f.i_dq.i_d));
  }
  return {!r.aborted && worst <= 0.05,
          "max |i_d| for t ≥ 10μ: " + fmt(worst) + " A (dt_ctrl = 1e-6 s)"};
}

// --- 10 --------------------------------------------------------------------

DqState integrate(DqState i, const DqVoltage& v, double omega, double dt, int steps,
                  const MachineParams& P) {
  for (int k = 0; k < steps; ++k) i = rk4_plant_step(i, v, omega, dt, P);
  return i;
}

Outcome integrator() {
  const DqState i0{2.0, -3.0};
  const DqVoltage v{5.0, 12.0};
  const DqState a = integrate(i0, v, 300.0, 1e-4, 100, P0);
  const DqState b = integrate(i0, v, 300.0, 5e-5, 200, P0);
  const DqState c = integrate(i0, v, 300.0, 2.5e-5, 400, P0);
  const double order = std::log2((a.vec() - b.vec()).norm() / (b.vec() - c.vec()).norm());

  // L_d = L_q: the system is linear with constant coefficients. Exact
  // solution of the augmented system x' = M x via the matrix exponential.
  const MachineParams round(0.5, 5e-3, 5e-3, 0.1, 4);
  const DqState j0{1.5, -4.0};
  const DqVoltage w{3.0, 20.0};
  double worst = 0.0;
  for (double omega : {0.0, 50.0, 150.0}) {
    const double L = round.L_d(), R = round.R();
    Eigen::Matrix3d M;
    M << -R / L, omega, w.v_d / L, omega, -R / L, (w.v_q - round.psi() * omega) / L, 0, 0, 0;
    // Scaling and squaring with a Taylor kernel.
    const double T = 0.01;
    const int squarings = 10;
    const Eigen::Matrix3d X = M * (T / std::ldexp(1.0, squarings));
    Eigen::Matrix3d E = Eigen::Matrix3d::Identity(), term = Eigen::Matrix3d::Identity();
    for (int k = 1; k <= 18; ++k) {
      term = term * X / k;
      E += term;
    }
    for (int k = 0; k < squarings; ++k) E = E * E;
    const Eigen::Vector3d exact = E * Eigen::Vector3d(j0.i_d, j0.i_q, 1.0);
    const DqState num = integrate(j0, w, omega, 1e-6, 10000, round);
    worst = std::max(worst, (num.vec() - exact.head<2>()).norm() / exact.head<2>().norm());
  }
  return {order >= 3.9 && worst <= 1e-9,
          "observed order " + fmt(order) + ", linear-case endpoint error " + fmt(worst)};
}

// --- 11 --------------------------------------------------------------------

Outcome transform_round_trip() {
  oflc::testing::StateSampler rng(109);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double theta = rng.uniform(-20, 20);
    Mat2 KKinv;
    for (int j = 0; j < 2; ++j) {
      const DqVoltage e = DqVoltage::from(Vec2::Unit(j));
      const AbcTriple abc = inverse_park_clarke(theta, e, P0);
      KKinv.col(j) = park_clarke(theta, abc, P0).vec();
    }
    worst = std::max(worst, (KKinv - Mat2::Identity()).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max |K K⁻¹ − I| = " + fmt(worst) + " over 1000 angles"};
}

// --- 12 --------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const char* env = std::getenv("OFLC_SCENARIO_DIR");
  const fs::path cfg = fs::path(env ? env : OFLC_DEFAULT_SCENARIO_DIR) / "s1.cfg";
  if (!fs::exists(cfg)) return {false, "missing " + cfg.string()};
  const fs::path root = fs::temp_directory_path() / "oflc_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream sink;
  for (const char* run : {"a", "b"}) {
    const int code = cli::run({"compare", "--scenario", cfg.string(), "--out", (root / run).string()},
                              sink, sink);
    if (code != 0) return {false, "compare exited " + std::to_string(code) + ": " + sink.str()};
  }
  int files = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const fs::path other = root / "b" / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
      return {false, entry.path().filename().string() + " differs"};
    }
    ++files;
  }
  fs::remove_all(root);
  return {files >= 4, std::to_string(files) + " output files byte-identical across two runs"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << " " << name << ": " << o.detail
              << std::endl;
    failures += !o.pass;
  };
  auto guarded = [](const std::function<Outcome()>& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  double derived = 0.0, printed = 0.0;
  const Outcome c1 = guarded([&] { return exact_linearization(derived, printed); });
  const Outcome c2 = guarded(transfer_function);
  guarded([] {
    infeasible_demands();
    return Outcome{true, ""};
  });
  const Outcome c5 = guarded(minimum_principle);
  const Outcome c6 = guarded(jacobian_checks);
  const Outcome c8 = guarded(energy_saving);
  const Outcome c9 = guarded(non_salient);
  const Outcome c10 = guarded(integrator);
  const Outcome c11 = guarded(transform_round_trip);
  const Outcome c12 = guarded(determinism);

  report(1, "exact linearization", c1);
  report(2, "closed-loop transfer function", c2);
  report(3, "orthogonality",
         {audit.worst_orthogonality <= 1e-10,
          "max |bᵀz|/(‖b‖‖z‖) = " + fmt(audit.worst_orthogonality) + " over " +
              std::to_string(audit.frames) + " ticks"});
  report(4, "voltage limit",
         {audit.worst_voltage <= 1.0 + 1e-9,
          "max ‖v‖/v_max = " + fmt(audit.worst_voltage) + " over " + std::to_string(audit.frames) +
              " ticks (" + std::to_string(audit.clamped) + " clamped)"});
  report(5, "minimum principle", c5);
  report(6, "gradient and Jacobian checks", c6);
  report(7, "torque-rate identity arbitration",
         {c1.pass && derived <= printed,
          "max residual derived b " + fmt(derived) + " N·m, printed b_d " + fmt(printed) + " N·m"});
  report(8, "energy saving", c8);
  report(9, "non-salient sanity", c9);
  report(10, "integrator order", c10);
  report(11, "transform round trip", c11);
  report(12, "determinism", c12);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
