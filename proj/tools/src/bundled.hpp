#pragma once

#include <span>
#include <string_view>

namespace weylworlds::cli {

struct BundledScenario {
    std::string_view name;
    std::string_view text;
};

// Scenarios compiled into the binary, in listing order.
std::span<const BundledScenario> bundled_scenarios();

const BundledScenario* find_bundled(std::string_view name);

}  // namespace weylworlds::cli
