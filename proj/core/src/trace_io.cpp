#include "pressem/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "pressem/errors.hpp"

namespace pressem {

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string write_trace_csv(const PressTrace& trace) {
  std::string out;
  out.reserve(trace.size() * 48 + 64);
  out += "# sample_rate_hz=" + format_number(trace.sample_rate_hz) + "\n";
  out += kTraceHeader;
  out += '\n';
  const double ms_per_sample = 1000.0 / trace.sample_rate_hz;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += format_number(static_cast<double>(i) * ms_per_sample);
    out += ',';
    out += format_number(trace.displacement_mm[i]);
    out += ',';
    out += format_number(trace.force_cN[i]);
    out += ',';
    out += format_number(trace.vibration[i]);
    out += '\n';
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string line_ref(std::size_t line) { return "line " + std::to_string(line); }

double parse_field(std::string_view text, std::size_t line, std::string_view column) {
  text = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ParseError(line_ref(line), "invalid " + std::string(column) + " value '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

PressTrace parse_trace_csv(std::string_view text, std::string source, std::optional<double> sidecar_rate_hz) {
  PressTrace trace;
  trace.source = std::move(source);
  std::optional<double> rate;
  std::vector<double> times;
  bool header_seen = false;
  std::size_t line_no = 0;

  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view key = "sample_rate_hz=";
      auto body = trim(line.substr(1));
      if (!header_seen && body.starts_with(key)) {
        rate = parse_field(body.substr(key.size()), line_no, "sample_rate_hz");
        if (!(*rate > 0.0)) throw ParseError(line_ref(line_no), "sample_rate_hz must be > 0");
      }
      continue;
    }
    if (!header_seen) {
      if (line != kTraceHeader) {
        throw ParseError(line_ref(line_no), "expected header '" + std::string(kTraceHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    for (std::string_view rest = line;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (fields.size() != 4) throw ParseError(line_ref(line_no), "expected 4 comma-separated fields");
    times.push_back(parse_field(fields[0], line_no, "t_ms"));
    trace.displacement_mm.push_back(parse_field(fields[1], line_no, "disp_mm"));
    trace.force_cN.push_back(parse_field(fields[2], line_no, "force_cN"));
    trace.vibration.push_back(parse_field(fields[3], line_no, "vib"));

    if (times.size() >= 2) {
      const double expected = rate ? 1000.0 / *rate : 0.0;
      const double dt = times.back() - times[times.size() - 2];
      if (rate) {
        if (std::abs(dt - expected) > kTimestampJitter * expected) {
          throw ParseError(line_ref(line_no), "non-uniform timestamp (step " + format_number(dt) +
                                                  " ms, expected " + format_number(expected) + " ms)");
        }
      } else if (sidecar_rate_hz) {
        const double exp2 = 1000.0 / *sidecar_rate_hz;
        if (std::abs(dt - exp2) > kTimestampJitter * exp2) {
          throw ParseError(line_ref(line_no), "non-uniform timestamp");
        }
      }
    }
  }
  if (!header_seen) throw ParseError(line_ref(line_no), "missing header");
  if (!rate) rate = sidecar_rate_hz;
  if (!rate) throw ParseError(line_ref(1), "sample rate not declared (comment line or sidecar)");
  if (trace.size() < 2) throw ParseError(line_ref(line_no), "trace needs at least 2 samples");
  trace.sample_rate_hz = *rate;
  return trace;
}

PressTrace read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "cannot open trace file");
  std::ostringstream ss;
  ss << in.rdbuf();

  std::optional<double> sidecar;
  auto side = path;
  side += ".json";
  if (std::filesystem::exists(side)) {
    std::ifstream sin(side, std::ios::binary);
    std::ostringstream sss;
    sss << sin.rdbuf();
    const auto doc = detail::parse_json(sss.str());
    sidecar = detail::number_field(doc, "sample_rate_hz", "");
  }
  try {
    return parse_trace_csv(ss.str(), path.filename().string(), sidecar);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ":" + e.location(), e.message());
  }
}

}  // namespace pressem
