#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "mia/core.hpp"

namespace mia {

/// Comma-separated items, each a number or an inclusive `start:stop:step`
/// range (the stop value is kept when within 1e-9 of the last step).
std::vector<double> parse_values(std::string_view spec);

/// Same syntax, restricted to non-negative integers.
std::vector<std::size_t> parse_counts(std::string_view spec);

/// Comma-separated method names; "all" expands to every method.
std::vector<Method> parse_methods(std::string_view spec);

}  // namespace mia
