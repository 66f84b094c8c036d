#pragma once

// Model document: versioned JSON with top-level fields
//   schema_version, name, travel_mm, step_mm, bins[], curves[], vibrations[]
// See docs/formats.md for the full field list.

#include <string>
#include <string_view>

#include "pressem/errors.hpp"
#include "pressem/fdvv.hpp"

namespace pressem {

class UnsupportedVersionError : public ParseError {
 public:
  explicit UnsupportedVersionError(long long version)
      : ParseError("/schema_version", "unsupported schema_version " + std::to_string(version)),
        version_(version) {}
  long long version() const noexcept { return version_; }

 private:
  long long version_;
};

std::string serialize_model(const FDVVModel& model);

// Structural parse only; call validate_model for invariant checks.
FDVVModel parse_model(std::string_view document);

// JSON array of {field, rule} objects.
std::string serialize_violations(const std::vector<Violation>& violations);

}  // namespace pressem
