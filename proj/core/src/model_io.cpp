#include "pressem/model_io.hpp"

#include "json_util.hpp"

namespace pressem {

using detail::json;

namespace {

json bins_to_json(const std::vector<VelocityBin>& bins) {
  json arr = json::array();
  for (const auto& b : bins) {
    arr.push_back({{"lo_mm_s", b.lo_mm_s}, {"hi_mm_s", b.hi_mm_s}, {"center_mm_s", b.center_mm_s}});
  }
  return arr;
}

Direction direction_field(const json& obj, const std::string& ptr) {
  const std::string p = detail::child(ptr, "direction");
  const std::string text = detail::as_string(detail::require_field(obj, "direction", ptr), p);
  try {
    return parse_direction(text);
  } catch (const DomainError& e) {
    throw ParseError(p, e.what());
  }
}

}  // namespace

std::string serialize_model(const FDVVModel& model) {
  json curves = json::array();
  for (const auto& [key, curve] : model.curves) {
    curves.push_back({{"direction", to_string(key.direction)},
                      {"bin", key.bin},
                      {"force_cN", curve.force_cN}});
  }
  json vibrations = json::array();
  for (const auto& v : model.vibrations) {
    vibrations.push_back({{"direction", to_string(v.direction)},
                          {"trigger_mm", v.trigger_mm},
                          {"sample_rate_hz", v.sample_rate_hz},
                          {"samples", v.samples}});
  }
  const json doc = {{"schema_version", model.schema_version},
                    {"name", model.name},
                    {"travel_mm", model.grid.travel_mm},
                    {"step_mm", model.grid.step_mm},
                    {"bins", bins_to_json(model.bins)},
                    {"curves", std::move(curves)},
                    {"vibrations", std::move(vibrations)}};
  return doc.dump(2) + "\n";
}

namespace detail {

std::vector<VelocityBin> parse_bins(const json& arr, const std::string& ptr) {
  require_array(arr, ptr);
  std::vector<VelocityBin> bins;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = child(ptr, i);
    const json& b = require_object(arr[i], p);
    bins.push_back({number_field(b, "lo_mm_s", p), number_field(b, "hi_mm_s", p),
                    number_field(b, "center_mm_s", p)});
  }
  return bins;
}

json bins_json(const std::vector<VelocityBin>& bins) { return bins_to_json(bins); }

}  // namespace detail

FDVVModel parse_model(std::string_view document) {
  const json doc = detail::parse_json(document);
  const std::string root;
  detail::require_object(doc, root);

  const auto version = detail::as_integer(detail::require_field(doc, "schema_version", root),
                                          "/schema_version");
  if (version != kModelSchemaVersion) throw UnsupportedVersionError(version);

  FDVVModel m;
  m.schema_version = static_cast<int>(version);
  m.name = detail::as_string(detail::require_field(doc, "name", root), "/name");
  m.grid.travel_mm = detail::number_field(doc, "travel_mm", root);
  m.grid.step_mm = detail::number_field(doc, "step_mm", root);
  m.bins = detail::parse_bins(detail::require_field(doc, "bins", root), "/bins");

  const json& curves = detail::require_array(detail::require_field(doc, "curves", root), "/curves");
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const std::string p = detail::child("/curves", i);
    const json& c = detail::require_object(curves[i], p);
    const Direction dir = direction_field(c, p);
    const auto bin = detail::as_unsigned(detail::require_field(c, "bin", p), detail::child(p, "bin"));
    FDCurve curve{dir, detail::as_number_array(detail::require_field(c, "force_cN", p),
                                               detail::child(p, "force_cN"))};
    if (!m.curves.emplace(CurveKey{dir, static_cast<std::size_t>(bin)}, std::move(curve)).second) {
      throw ParseError(p, "duplicate curve for (direction, bin)");
    }
  }

  const json& vibs =
      detail::require_array(detail::require_field(doc, "vibrations", root), "/vibrations");
  for (std::size_t i = 0; i < vibs.size(); ++i) {
    const std::string p = detail::child("/vibrations", i);
    const json& v = detail::require_object(vibs[i], p);
    VibrationProfile vp;
    vp.direction = direction_field(v, p);
    vp.trigger_mm = detail::number_field(v, "trigger_mm", p);
    vp.sample_rate_hz = detail::number_field(v, "sample_rate_hz", p);
    vp.samples = detail::as_number_array(detail::require_field(v, "samples", p),
                                         detail::child(p, "samples"));
    m.vibrations.push_back(std::move(vp));
  }
  return m;
}

std::string serialize_violations(const std::vector<Violation>& violations) {
  json arr = json::array();
  for (const auto& v : violations) arr.push_back({{"field", v.field}, {"rule", v.rule}});
  return arr.dump();
}

}  // namespace pressem
