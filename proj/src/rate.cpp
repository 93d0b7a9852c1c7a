#include "eipl/rate.hpp"

namespace eipl {

std::string format_percent(std::int64_t passed, std::int64_t total) {
    if (total <= 0) return "N/A";
    if (passed == total) return "100%";
    // tenths of a percent, half-up: floor((passed * 1000 * 2 + total) / (2 * total))
    const std::int64_t tenths = (passed * 2000 + total) / (2 * total);
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10) + "%";
}

std::string format_cell(std::int64_t passed, std::int64_t total) {
    return std::to_string(passed) + "/" + std::to_string(total) + " (" + format_percent(passed, total) + ")";
}

}  // namespace eipl
