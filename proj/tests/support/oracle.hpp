#pragma once

// Brute-force reference answers computed directly from the generator's
// ground-truth structs. Deliberately shares no code with the solver: rank
// answers come from repeated minimum extraction, point-in-time answers from
// a year-by-year sweep, neighbours from linear scans.

#include <optional>
#include <string>

#include "support/gen.hpp"

namespace tiser::testgen {

std::optional<std::string> oracle_answer(const GenInstance& instance);

}  // namespace tiser::testgen
