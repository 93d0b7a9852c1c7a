#pragma once

#include <cstdint>
#include <string>

namespace eipl {

/// Percentage with one decimal, rounded half-up on the exact fraction.
/// A full score renders as "100%" and an empty denominator as "N/A".
std::string format_percent(std::int64_t passed, std::int64_t total);

/// "k/n (p%)", e.g. "403/482 (83.6%)" or "0/0 (N/A)".
std::string format_cell(std::int64_t passed, std::int64_t total);

}  // namespace eipl
