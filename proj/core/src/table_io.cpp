#include "pressem/table_io.hpp"

#include <cmath>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "json_util.hpp"
#include "pressem/trace_io.hpp"

namespace pressem {

using detail::json;

namespace {

Direction parse_direction_at(const std::string& text, const std::string& ptr) {
  try {
    return parse_direction(text);
  } catch (const DomainError& e) {
    throw ParseError(ptr, e.what());
  }
}

}  // namespace

std::string serialize_table(const ActuationTable& table) {
  const double top = static_cast<double>(max_code(table.quantization_bits));
  json duties = json::array();
  for (const auto& [key, curve] : table.duties) {
    std::vector<std::uint32_t> codes;
    codes.reserve(curve.size());
    for (double u : curve) codes.push_back(static_cast<std::uint32_t>(std::lround(std::clamp(u, 0.0, 1.0) * top)));
    duties.push_back({{"direction", to_string(key.direction)}, {"bin", key.bin}, {"codes", std::move(codes)}});
  }
  const json doc = {{"schema_version", table.schema_version},
                    {"grid", {{"travel_mm", table.grid.travel_mm}, {"step_mm", table.grid.step_mm}}},
                    {"bins", detail::bins_json(table.bins)},
                    {"quantization_bits", table.quantization_bits},
                    {"duties", std::move(duties)}};
  return doc.dump(2) + "\n";
}

ActuationTable parse_table(std::string_view document) {
  const json doc = detail::parse_json(document);
  const std::string root;
  detail::require_object(doc, root);
  const auto version = detail::as_integer(detail::require_field(doc, "schema_version", root), "/schema_version");
  if (version != kTableSchemaVersion) {
    throw ParseError("/schema_version", "unsupported schema_version " + std::to_string(version));
  }
  ActuationTable t;
  const json& grid = detail::require_object(detail::require_field(doc, "grid", root), "/grid");
  t.grid.travel_mm = detail::number_field(grid, "travel_mm", "/grid");
  t.grid.step_mm = detail::number_field(grid, "step_mm", "/grid");
  t.bins = detail::parse_bins(detail::require_field(doc, "bins", root), "/bins");
  const auto bits = detail::as_unsigned(detail::require_field(doc, "quantization_bits", root), "/quantization_bits");
  if (bits < 1 || bits > 31) throw ParseError("/quantization_bits", "must be in [1, 31]");
  t.quantization_bits = static_cast<unsigned>(bits);
  const double top = static_cast<double>(max_code(t.quantization_bits));

  const json& duties = detail::require_array(detail::require_field(doc, "duties", root), "/duties");
  for (std::size_t i = 0; i < duties.size(); ++i) {
    const std::string p = detail::child("/duties", i);
    const json& d = detail::require_object(duties[i], p);
    const Direction dir = parse_direction_at(
        detail::as_string(detail::require_field(d, "direction", p), detail::child(p, "direction")),
        detail::child(p, "direction"));
    const auto bin = detail::as_unsigned(detail::require_field(d, "bin", p), detail::child(p, "bin"));
    const std::string cp = detail::child(p, "codes");
    const json& codes = detail::require_array(detail::require_field(d, "codes", p), cp);
    std::vector<double> curve;
    curve.reserve(codes.size());
    for (std::size_t k = 0; k < codes.size(); ++k) {
      const auto code = detail::as_unsigned(codes[k], detail::child(cp, k));
      if (static_cast<double>(code) > top) throw ParseError(detail::child(cp, k), "code exceeds 2^bits - 1");
      curve.push_back(static_cast<double>(code) / top);
    }
    if (!t.duties.emplace(CurveKey{dir, static_cast<std::size_t>(bin)}, std::move(curve)).second) {
      throw ParseError(p, "duplicate duty curve for (direction, bin)");
    }
  }
  return t;
}

std::string serialize_report(const ConvergenceReport& report) {
  json bins = json::array();
  for (const auto& b : report.bins) {
    bins.push_back({{"direction", to_string(b.direction)},
                    {"bin", b.bin},
                    {"center_mm_s", b.center_mm_s},
                    {"converged", b.converged},
                    {"iterations_used", b.iterations_used},
                    {"initial_mean_abs_error_cN", b.initial_mean_abs_error_cN},
                    {"initial_max_error_cN", b.initial_max_error_cN},
                    {"mean_abs_error_cN", b.mean_abs_error_cN},
                    {"max_error_cN", b.max_error_cN},
                    {"mean_signed_error_cN", b.mean_signed_error_cN},
                    {"saturated_points", b.saturated_points}});
  }
  const json doc = {{"schema_version", 1},
                    {"converged", report.converged()},
                    {"final_mean_abs_error_cN", report.final_mean_abs_error_cN()},
                    {"max_iterations_used", report.max_iterations_used()},
                    {"bins", std::move(bins)}};
  return doc.dump(2) + "\n";
}

ConvergenceReport parse_report(std::string_view document) {
  const json doc = detail::parse_json(document);
  const std::string root;
  detail::require_object(doc, root);
  const auto version = detail::as_integer(detail::require_field(doc, "schema_version", root), "/schema_version");
  if (version != 1) throw ParseError("/schema_version", "unsupported schema_version " + std::to_string(version));
  ConvergenceReport r;
  const json& bins = detail::require_array(detail::require_field(doc, "bins", root), "/bins");
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const std::string p = detail::child("/bins", i);
    const json& j = detail::require_object(bins[i], p);
    BinReport b;
    b.direction = parse_direction_at(
        detail::as_string(detail::require_field(j, "direction", p), detail::child(p, "direction")),
        detail::child(p, "direction"));
    b.bin = detail::as_unsigned(detail::require_field(j, "bin", p), detail::child(p, "bin"));
    b.center_mm_s = detail::number_field(j, "center_mm_s", p);
    b.converged = detail::as_bool(detail::require_field(j, "converged", p), detail::child(p, "converged"));
    b.iterations_used =
        detail::as_unsigned(detail::require_field(j, "iterations_used", p), detail::child(p, "iterations_used"));
    b.initial_mean_abs_error_cN = detail::number_field(j, "initial_mean_abs_error_cN", p);
    b.initial_max_error_cN = detail::number_field(j, "initial_max_error_cN", p);
    auto series = [&](const char* key) {
      return detail::as_number_array(detail::require_field(j, key, p), detail::child(p, key));
    };
    b.mean_abs_error_cN = series("mean_abs_error_cN");
    b.max_error_cN = series("max_error_cN");
    b.mean_signed_error_cN = series("mean_signed_error_cN");
    const std::string sp = detail::child(p, "saturated_points");
    const json& sat = detail::require_array(detail::require_field(j, "saturated_points", p), sp);
    for (std::size_t k = 0; k < sat.size(); ++k) b.saturated_points.push_back(detail::as_unsigned(sat[k], detail::child(sp, k)));
    if (b.mean_abs_error_cN.size() != b.iterations_used || b.max_error_cN.size() != b.iterations_used) {
      throw ParseError(p, "error series length must equal iterations_used");
    }
    r.bins.push_back(std::move(b));
  }
  return r;
}

std::string report_csv(const ConvergenceReport& report) {
  std::string s(kReportCsvHeader);
  s += '\n';
  auto row = [&](std::size_t it, const BinReport& b, double mean, double max) {
    s += std::to_string(it) + "," + std::string(to_string(b.direction)) + "," + std::to_string(b.bin) + "," +
         format_number(mean) + "," + format_number(max) + "\n";
  };
  for (const auto& b : report.bins) {
    row(0, b, b.initial_mean_abs_error_cN, b.initial_max_error_cN);
    for (std::size_t k = 0; k < b.mean_abs_error_cN.size(); ++k) row(k + 1, b, b.mean_abs_error_cN[k], b.max_error_cN[k]);
  }
  return s;
}

ConvergenceReport parse_report_csv(std::string_view text, double epsilon_cN) {
  ConvergenceReport r;
  std::size_t line_no = 0;
  bool header = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::string loc = "line " + std::to_string(line_no);
    if (!header) {
      if (line != kReportCsvHeader) throw ParseError(loc, "expected header '" + std::string(kReportCsvHeader) + "'");
      header = true;
      continue;
    }
    std::vector<std::string_view> f;
    for (std::size_t pos = 0;;) {
      const auto c = line.find(',', pos);
      f.push_back(line.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
      if (c == std::string_view::npos) break;
      pos = c + 1;
    }
    if (f.size() != 5) throw ParseError(loc, "expected 5 fields");
    auto integer = [&](std::string_view v) {
      std::size_t out = 0;
      const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
      if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) throw ParseError(loc, "bad integer '" + std::string(v) + "'");
      return out;
    };
    auto number = [&](std::string_view v) {
      double out = 0.0;
      const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
      if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) throw ParseError(loc, "bad number '" + std::string(v) + "'");
      return out;
    };
    const std::size_t it = integer(f[0]);
    const Direction dir = parse_direction_at(std::string(f[1]), loc);
    const std::size_t bin = integer(f[2]);
    const double mean = number(f[3]), max = number(f[4]);
    if (it == 0) {
      BinReport b;
      b.direction = dir;
      b.bin = bin;
      b.initial_mean_abs_error_cN = mean;
      b.initial_max_error_cN = max;
      r.bins.push_back(std::move(b));
      continue;
    }
    if (r.bins.empty() || r.bins.back().direction != dir || r.bins.back().bin != bin ||
        r.bins.back().iterations_used + 1 != it) {
      throw ParseError(loc, "rows must list iterations 0, 1, ... for each (direction, bin)");
    }
    auto& b = r.bins.back();
    b.mean_abs_error_cN.push_back(mean);
    b.max_error_cN.push_back(max);
    b.iterations_used = it;
  }
  if (!header) throw ParseError("line 1", "missing header");
  for (auto& b : r.bins) b.converged = epsilon_cN > 0.0 && b.final_mean_abs_error_cN() <= epsilon_cN;
  return r;
}

std::string format_report_summary(const ConvergenceReport& report) {
  std::ostringstream os;
  char buf[160];
  for (const auto& b : report.bins) {
    std::snprintf(buf, sizeof buf, "%-7s bin %zu  iterations %2zu  mean %8.3f cN  max %8.3f cN  %s%s\n",
                  std::string(to_string(b.direction)).c_str(), b.bin, b.iterations_used, b.final_mean_abs_error_cN(),
                  b.final_max_error_cN(), b.converged ? "converged" : "not converged",
                  b.saturated_points.empty() ? "" : ("  saturated points " + std::to_string(b.saturated_points.size())).c_str());
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "overall mean %.3f cN, max iterations %zu, %s\n", report.final_mean_abs_error_cN(),
                report.max_iterations_used(), report.converged() ? "converged" : "not converged");
  os << buf;
  return os.str();
}

}  // namespace pressem
