#pragma once

// JSON forms of the library values. Series use
//   {"omega": [...], "width": r, "K": K, "coeffs": [{"k": [...], "re": .., "im": ..}, ...]}
// with zero coefficients omitted; strip functions add "s", "J" and a
// Chebyshev degree "j" on every coefficient entry.

#include <json.hpp>

#include "qpkam/diophantine.hpp"
#include "qpkam/kam.hpp"
#include "qpkam/qpfourier.hpp"

namespace qpkam {

nlohmann::json to_json(const ShellFunction& f);
nlohmann::json to_json(const StripFunction& f);
// Throws ConfigError on malformed input.
ShellFunction shell_from_json(const nlohmann::json& j);
StripFunction strip_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Frequency& f);
nlohmann::json to_json(const RotationNumber& r);
nlohmann::json to_json(const RotationCertificate& c);
nlohmann::json to_json(const DivisorSumReport& r);

// {"rotation": .., "defect": .., "phi": series, "psi": series}.
nlohmann::json to_json(const InvariantCurve& c);
InvariantCurve curve_from_json(const nlohmann::json& j);

nlohmann::json trace_json(const std::vector<LevelRecord>& trace);

}  // namespace qpkam
