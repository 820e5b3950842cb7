#pragma once

#include <string>

#include <json.hpp>

namespace ehc {

using Json = nlohmann::json;

// Canonical, byte-deterministic serialization: object keys sorted, no
// insignificant whitespace, floating-point numbers written with exactly six
// fractional digits ("%.6f" semantics, locale independent). Values that
// round to zero are written as "0.000000" so -0.0 and 0.0 agree.
// Throws std::invalid_argument on NaN or infinity.
std::string canonical_dump(const Json& value);

// Rounds to the value a canonical write/read cycle would produce.
double quantize6(double value);

}  // namespace ehc
