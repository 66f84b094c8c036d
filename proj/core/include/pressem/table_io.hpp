#pragma once

// Actuation table document:
//   {schema_version, grid: {travel_mm, step_mm}, bins[], quantization_bits,
//    duties: [{direction, bin, codes[]}]}
// where duty = code / (2^bits - 1).
//
// Convergence report: JSON (full detail) or CSV
//   iteration,direction,bin,mean_err_cN,max_err_cN
// with iteration 0 holding the trial before the first update.

#include <string>
#include <string_view>

#include "pressem/compensation.hpp"

namespace pressem {

inline constexpr std::string_view kReportCsvHeader = "iteration,direction,bin,mean_err_cN,max_err_cN";

std::string serialize_table(const ActuationTable& table);
// Structural parse; codes outside [0, 2^bits - 1] are rejected.
ActuationTable parse_table(std::string_view document);

std::string serialize_report(const ConvergenceReport& report);
ConvergenceReport parse_report(std::string_view document);

std::string report_csv(const ConvergenceReport& report);
// Fills direction, bin and the error series; centers, signed errors and
// saturation are not part of the CSV. `converged` is inferred from
// `epsilon_cN` when given.
ConvergenceReport parse_report_csv(std::string_view text, double epsilon_cN = 0.0);

// Human-readable summary (one line per bin and a total).
std::string format_report_summary(const ConvergenceReport& report);

}  // namespace pressem
