#include "oflc/trace.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "oflc/config.hpp"
#include "oflc/errors.hpp"

namespace oflc {

unsigned pack_flags(const SaturationReport& r) {
  return (r.u_clamped ? kFlagUClamped : 0u) | (r.z_at_limit ? kFlagZAtLimit : 0u) |
         (r.z_zeroed ? kFlagZZeroed : 0u) | (r.b_degenerate ? kFlagBDegenerate : 0u) |
         (r.ill_conditioned ? kFlagIllConditioned : 0u);
}

void write_trace(std::ostream& out, std::span<const ControlFrame> frames, int decimation) {
  if (decimation < 1) throw ValidationError("decimation", "must be an integer >= 1");
  out << "# oflc trace v1\n"
      << "# flags: 1=u_clamped 2=z_at_limit 4=z_zeroed 8=b_degenerate 16=ill_conditioned\n"
      << kTraceHeader << "\n";
  for (std::size_t k = 0; k < frames.size(); k += static_cast<std::size_t>(decimation)) {
    const ControlFrame& f = frames[k];
    const double row[] = {f.t,          f.i_dq.i_d,         f.i_dq.i_q,         f.v_dq.v_d,
                          f.v_dq.v_q,   f.tau_ref,          f.tau_est,          f.u_raw,
                          f.u_feasible, f.omega,            f.z.x(),            f.z.y(),
                          f.lambda.lambda.x(), f.lambda.lambda.y(), f.copper_loss_w};
    for (double v : row) {
      out << format_double(v) << ',';
    }
    out << pack_flags(f.report) << '\n';
  }
}

std::vector<TraceRow> read_trace(std::istream& in) {
  std::vector<TraceRow> rows;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kTraceHeader) throw ParseError(line_no, "unexpected trace header");
      header_seen = true;
      continue;
    }
    TraceRow row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.values.push_back(v);
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad trace value '" + cell + "'");
      }
    }
    if (row.values.size() != 16) throw ParseError(line_no, "expected 16 columns");
    row.flags = static_cast<unsigned>(row.values.back());
    row.values.pop_back();
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw ParseError(line_no, "trace header missing");
  return rows;
}

namespace {

void write_run_block(std::ostream& out, const std::string& prefix, const RunResult& r) {
  out << prefix << "cost_integral_A2s: " << format_double(r.cost_integral) << "\n"
      << prefix << "copper_energy_J: " << format_double(r.copper_energy_j) << "\n"
      << prefix << "rms_tracking_error_Nm: " << format_double(r.rms_tracking_error) << "\n"
      << prefix << "frames: " << r.frames.size() << "\n"
      << prefix << "u_clamped: " << r.saturation.u_clamped << "\n"
      << prefix << "z_at_limit: " << r.saturation.z_at_limit << "\n"
      << prefix << "z_zeroed: " << r.saturation.z_zeroed << "\n"
      << prefix << "b_degenerate: " << r.saturation.b_degenerate << "\n"
      << prefix << "ill_conditioned: " << r.saturation.ill_conditioned << "\n"
      << prefix << "aborted: " << (r.aborted ? "true" : "false") << "\n";
  if (r.aborted) out << prefix << "abort_reason: " << r.abort_reason << "\n";
}

void write_scenario_block(std::ostream& out, const Scenario& s) {
  out << "duration_s: " << format_double(s.duration) << "\n"
      << "dt_plant_s: " << format_double(s.dt_plant) << "\n"
      << "dt_ctrl_s: " << format_double(s.dt_ctrl) << "\n"
      << "horizon_s: " << format_double(s.horizon) << "\n"
      << "v_max_V: " << format_double(s.v_max) << "\n";
}

}  // namespace

void write_summary(std::ostream& out, const Scenario& scenario, const RunResult& result) {
  out << "controller: " << to_string(result.controller) << "\n";
  write_scenario_block(out, scenario);
  write_run_block(out, "", result);
}

void write_compare_summary(std::ostream& out, const Scenario& scenario,
                           std::span<const RunResult> results) {
  out << "controllers:";
  for (const RunResult& r : results) out << " " << to_string(r.controller);
  out << "\n";
  write_scenario_block(out, scenario);
  const RunResult* oflc = nullptr;
  const RunResult* flc = nullptr;
  for (const RunResult& r : results) {
    write_run_block(out, std::string(to_string(r.controller)) + ".", r);
    if (r.controller == ControllerKind::kOflc) oflc = &r;
    if (r.controller == ControllerKind::kFlcZ0) flc = &r;
  }
  if (oflc && flc && flc->cost_integral > 0.0) {
    const double ratio = oflc->cost_integral / flc->cost_integral;
    out << "energy_ratio_oflc_over_flc_z0: " << format_double(ratio) << "\n"
        << "energy_saving_oflc_vs_flc_z0: " << format_double(1.0 - ratio) << "\n";
  }
}

}  // namespace oflc
