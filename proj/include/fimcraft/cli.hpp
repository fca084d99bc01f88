#pragma once

#include <string>
#include <vector>

namespace fimcraft {

/// Exit codes: 0 success, 1 fatal or partial failure, 2 invalid
/// configuration or usage.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

std::string version_string();

}  // namespace fimcraft
