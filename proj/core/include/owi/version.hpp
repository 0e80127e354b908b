#pragma once

namespace owi {

// Artifact version embedded in every output file's metadata header so result
// files stay auditable after the fact.
inline constexpr const char* version = "0.1.0";

} // namespace owi
