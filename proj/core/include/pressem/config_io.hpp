#pragma once

// JSON documents for the plant, capture, compensation and renderer
// configurations. Every field is optional and defaults to the struct's
// default; unknown fields are rejected. Field names are listed in
// docs/formats.md.

#include <string>
#include <string_view>

#include "pressem/capture.hpp"
#include "pressem/compensation.hpp"
#include "pressem/plant.hpp"
#include "pressem/renderer.hpp"

namespace pressem {

std::string serialize_plant(const PlantConfig& config);
PlantConfig parse_plant(std::string_view document);

std::string serialize_capture_config(const CaptureConfig& config);
CaptureConfig parse_capture_config(std::string_view document);

std::string serialize_compensation_config(const CompensationConfig& config);
CompensationConfig parse_compensation_config(std::string_view document);

std::string serialize_renderer_config(const RendererConfig& config);
RendererConfig parse_renderer_config(std::string_view document);

}  // namespace pressem
