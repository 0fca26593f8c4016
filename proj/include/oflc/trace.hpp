#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "oflc/sim_harness.hpp"

namespace oflc {

/// Column order of the trace CSV.
inline constexpr const char* kTraceHeader =
    "t,i_d,i_q,v_d,v_q,tau_ref,tau_est,u_raw,u_feasible,omega,z_d,z_q,lambda_d,lambda_q,"
    "p_copper_W,flags";

/// Bits of the `flags` column.
enum TraceFlag : unsigned {
  kFlagUClamped = 1u << 0,
  kFlagZAtLimit = 1u << 1,
  kFlagZZeroed = 1u << 2,
  kFlagBDegenerate = 1u << 3,
  kFlagIllConditioned = 1u << 4,
};

unsigned pack_flags(const SaturationReport& report);

/// Two '#' comment lines (format tag, flag legend), the header row, then one
/// row per `decimation`-th frame. Values use the shortest round-trip form.
void write_trace(std::ostream& out, std::span<const ControlFrame> frames, int decimation = 1);

/// One parsed data row of a trace, in kTraceHeader column order.
struct TraceRow {
  std::vector<double> values;
  unsigned flags = 0;
};

/// Reads back a trace written by write_trace. Throws ParseError.
std::vector<TraceRow> read_trace(std::istream& in);

/// `key: value` summary of one run.
void write_summary(std::ostream& out, const Scenario& scenario, const RunResult& result);

/// Per-controller block prefixed with the controller name, plus
/// energy_ratio_oflc_over_flc_z0 and energy_saving_oflc_vs_flc_z0 when both ran.
void write_compare_summary(std::ostream& out, const Scenario& scenario,
                           std::span<const RunResult> results);

}  // namespace oflc
