#pragma once

// Trace CSV: optional first line `# sample_rate_hz=<n>`, then the header
// `t_ms,disp_mm,force_cN,vib` and one row per sample. Without the comment
// line the rate comes from a sidecar `<file>.json` holding
// {"sample_rate_hz": n}. Timestamps must be uniform within 1% jitter.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "pressem/trace.hpp"

namespace pressem {

inline constexpr std::string_view kTraceHeader = "t_ms,disp_mm,force_cN,vib";
inline constexpr double kTimestampJitter = 0.01;

std::string write_trace_csv(const PressTrace& trace);

// Throws ParseError with location "line N".
PressTrace parse_trace_csv(std::string_view text, std::string source = {},
                           std::optional<double> sidecar_rate_hz = std::nullopt);

PressTrace read_trace_file(const std::filesystem::path& path);

// Shortest round-trip decimal form of a double.
std::string format_number(double value);

}  // namespace pressem
