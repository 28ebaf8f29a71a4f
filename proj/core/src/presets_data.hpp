#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace spinramp::detail {

// (name, YAML text) for every file under presets/, sorted by name.
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_presets();

} // namespace spinramp::detail
