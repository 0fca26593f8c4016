#include "oflc/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "oflc/config.hpp"
#include "oflc/energy_optimizer.hpp"
#include "oflc/errors.hpp"
#include "oflc/trace.hpp"

namespace oflc::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string scenario_path;
  std::string controller;
  std::vector<std::string> controllers;
  std::string out_dir;
  int decimation = 0;
  std::optional<double> v_max;
  std::optional<double> horizon;
  std::optional<double> kp;
  std::optional<double> ki;
  std::optional<double> alpha_z;
};

void add_run_options(CLI::App& cmd, Options& o) {
  cmd.add_option("--out", o.out_dir, "Output directory (default: $OFLC_OUT_DIR or .)");
  cmd.add_option("--decimation", o.decimation, "Write every N-th frame to the trace")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--v-max", o.v_max, "Override bus voltage limit (V)");
  cmd.add_option("--horizon", o.horizon, "Override costate horizon (s)");
  cmd.add_option("--kp", o.kp, "Override PI proportional gain");
  cmd.add_option("--ki", o.ki, "Override PI integral gain (1/s)");
  cmd.add_option("--alpha-z", o.alpha_z, "Scale on the z voltage budget, (0, 1]");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scenario", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParsedConfig load(const Options& o) {
  ParsedConfig cfg = parse_config(read_file(o.scenario_path));
  RunConfig& run = cfg.run;
  run.scenario_path = o.scenario_path;
  if (!o.out_dir.empty()) {
    run.out_dir = o.out_dir;
  } else if (const char* env = std::getenv("OFLC_OUT_DIR"); env && *env) {
    run.out_dir = env;
  }
  if (o.decimation > 0) run.decimation = o.decimation;
  run.v_max = o.v_max;
  run.horizon = o.horizon;
  run.kp = o.kp;
  run.ki = o.ki;
  run.alpha_z = o.alpha_z;
  apply_overrides(cfg.scenario, run);
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ValidationError("out", "cannot create output directory '" + dir + "'");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("out", "cannot write '" + path.string() + "'");
  f << text;
}

void write_run_files(const RunConfig& run, const RunResult& r) {
  std::ostringstream trace;
  write_trace(trace, r.frames, run.decimation);
  write_text(fs::path(run.out_dir) / (std::string(to_string(r.controller)) + "_trace.csv"),
             trace.str());
}

int simulate(const Options& o, std::ostream& out) {
  ParsedConfig cfg = load(o);
  const ControllerKind kind = o.controller.empty() ? cfg.run.controllers.front()
                                                   : parse_controller_kind(o.controller);
  ensure_dir(cfg.run.out_dir);
  const RunResult r = run_scenario(cfg.scenario, kind);
  write_run_files(cfg.run, r);
  std::ostringstream summary;
  write_summary(summary, cfg.scenario, r);
  write_text(fs::path(cfg.run.out_dir) / (std::string(to_string(kind)) + "_summary.txt"),
             summary.str());
  out << summary.str();
  return r.aborted ? kExitNumerical : kExitOk;
}

int compare(const Options& o, std::ostream& out) {
  ParsedConfig cfg = load(o);
  std::vector<ControllerKind> kinds;
  for (const std::string& name : o.controllers) kinds.push_back(parse_controller_kind(name));
  if (kinds.empty()) {
    kinds = {ControllerKind::kOflc, ControllerKind::kFlcZ0, ControllerKind::kIdZero};
  }
  ensure_dir(cfg.run.out_dir);

  std::vector<std::future<RunResult>> jobs;
  for (ControllerKind kind : kinds) {
    jobs.push_back(std::async(std::launch::async,
                              [&scenario = cfg.scenario, kind] { return run_scenario(scenario, kind); }));
  }
  std::vector<RunResult> results;
  for (auto& job : jobs) results.push_back(job.get());

  bool aborted = false;
  for (const RunResult& r : results) {
    write_run_files(cfg.run, r);
    aborted = aborted || r.aborted;
  }
  std::ostringstream summary;
  write_compare_summary(summary, cfg.scenario, results);
  write_text(fs::path(cfg.run.out_dir) / "compare_summary.txt", summary.str());
  out << summary.str();
  return aborted ? kExitNumerical : kExitOk;
}

// Self-test: invariant checks on a full run plus spot checks of the
// per-tick math at random states.

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

Check check_frames(const Scenario& s, const RunResult& r) {
  Check c{"frame invariants (" + std::to_string(r.frames.size()) + " ticks)", true, {}};
  double worst_v = 0.0;
  double worst_orth = 0.0;
  for (const ControlFrame& f : r.frames) {
    worst_v = std::max(worst_v, f.v_dq.vec().norm() / s.v_max);
    if (!f.report.b_degenerate && f.z.norm() > 0.0) {
      const Vec2 b = torque_channel(f.i_dq, s.params);
      worst_orth = std::max(worst_orth, std::abs(b.dot(f.z)) / (b.norm() * f.z.norm()));
    }
    if (!(f.v_abc == inverse_park_clarke(f.theta, f.v_dq, s.params)) ||
        f.tau_est != torque(f.i_dq, s.params)) {
      c.pass = false;
      c.detail = "frame at t=" + format_double(f.t) + " inconsistent";
      return c;
    }
  }
  c.pass = worst_v <= 1.0 + 1e-9 && worst_orth <= 1e-10 && !r.aborted;
  c.detail = "max |v|/v_max=" + format_double(worst_v) + " max |bᵀz|/(|b||z|)=" +
             format_double(worst_orth);
  return c;
}

Check check_trace_rows(const Scenario& s, const RunResult& r) {
  Check c{"trace CSV rows", true, {}};
  std::stringstream buf;
  write_trace(buf, r.frames, 1);
  const std::vector<TraceRow> rows = read_trace(buf);
  if (rows.size() != r.frames.size()) {
    c.pass = false;
    c.detail = "row count mismatch";
    return c;
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& v = rows[k].values;
    const double v_norm = std::hypot(v[3], v[4]);
    const double tau = torque({v[1], v[2]}, s.params);
    if (v_norm > s.v_max * (1.0 + 1e-9) || v[6] != tau ||
        rows[k].flags != pack_flags(r.frames[k].report)) {
      c.pass = false;
      c.detail = "row " + std::to_string(k) + " violates frame invariants";
      return c;
    }
  }
  c.detail = std::to_string(rows.size()) + " rows";
  return c;
}

Check check_transforms(const MachineParams& params, std::mt19937_64& rng) {
  Check c{"Park-Clarke round trip", true, {}};
  std::uniform_real_distribution<double> angle(-10.0, 10.0);
  std::uniform_real_distribution<double> val(-100.0, 100.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double theta = angle(rng);
    const DqVoltage v{val(rng), val(rng)};
    const AbcTriple abc = inverse_park_clarke(theta, v, params);
    const DqState back = park_clarke(theta, abc, params);
    worst = std::max(worst, std::max(std::abs(back.i_d - v.v_d), std::abs(back.i_q - v.v_q)) /
                                std::max(1.0, v.vec().norm()));
  }
  c.pass = worst <= 1e-12;
  c.detail = "max error " + format_double(worst);
  return c;
}

Check check_minimum_principle(const Scenario& s, std::mt19937_64& rng) {
  Check c{"z minimizes the Hamiltonian", true, {}};
  std::uniform_real_distribution<double> cur(-20.0, 20.0);
  std::uniform_real_distribution<double> speed(-300.0, 300.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const MachineParams& P = s.params;
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const DqState i{cur(rng), cur(rng)};
    const double omega = speed(rng);
    const LinearizationTerms terms = compute_terms(i, omega, P);
    const ClampedTorque ct = clamp_torque_command(
        terms.phi + (2.0 * unit(rng) - 1.0) * terms.b_norm() * s.v_max, terms, s.v_max);
    const CostateMatrices m = costate_matrices(i, omega, ct.u, terms, P);
    const Costate lam = estimate_costate(i, m.A, s.horizon).costate;
    const double z_max = z_limit(ct.u, terms, s.v_max);
    const Vec2 z = optimal_z(lam, projection(terms.b), P.inductance_inverse(), z_max).z;
    const double h_opt = hamiltonian(i, lam, ct.u, z, terms, omega, P);
    const Vec2 n = Vec2(-terms.b.y(), terms.b.x()).normalized();
    double h_min = h_opt;
    for (int j = 0; j <= 200; ++j) {
      const double scale = z_max * (-1.0 + 2.0 * j / 200.0);
      h_min = std::min(h_min, hamiltonian(i, lam, ct.u, scale * n, terms, omega, P));
    }
    worst = std::max(worst, (h_opt - h_min) / std::max(1.0, std::abs(h_min)));
  }
  c.pass = worst <= 1e-6;
  c.detail = "max excess " + format_double(worst);
  return c;
}

int selftest(const std::string& scenario_path, std::ostream& out) {
  Scenario s = standard_scenario_s1();
  if (!scenario_path.empty()) s = parse_config(read_file(scenario_path)).scenario;

  std::mt19937_64 rng(20240611);
  const RunResult r = run_scenario(s, ControllerKind::kOflc);
  const std::vector<Check> checks{
      check_frames(s, r),
      check_trace_rows(s, r),
      check_transforms(s.params, rng),
      check_minimum_principle(s, rng),
  };
  bool ok = true;
  for (const Check& c : checks) {
    out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
    ok = ok && c.pass;
  }
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Torque control simulator with copper-loss-optimal feedback linearization",
               "oflc"};
  app.require_subcommand(1, 1);

  Options o;
  CLI::App* sim = app.add_subcommand("simulate", "Run one controller on a scenario");
  sim->add_option("--scenario", o.scenario_path, "Scenario config file")->required();
  sim->add_option("--controller", o.controller, "oflc | flc_z0 | id_zero");
  add_run_options(*sim, o);

  CLI::App* cmp = app.add_subcommand("compare", "Run several controllers on one scenario");
  cmp->add_option("--scenario", o.scenario_path, "Scenario config file")->required();
  cmp->add_option("--controllers", o.controllers, "Controllers to compare")->delimiter(',');
  add_run_options(*cmp, o);

  CLI::App* self = app.add_subcommand("selftest", "Check controller invariants");
  self->add_option("--scenario", o.scenario_path, "Scenario config file (default: built-in S1)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (sim->parsed()) return simulate(o, out);
    if (cmp->parsed()) return compare(o, out);
    return selftest(o.scenario_path, out);
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace oflc::cli
