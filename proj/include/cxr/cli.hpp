#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cxr {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Exit codes: 0 ok, 1 unreadable input or write failure, 2 invalid rules
// file, 3 invalid configuration or data, 4 training divergence.
int run_cli(const std::vector<std::string>& args);

}  // namespace cxr
