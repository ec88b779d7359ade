#pragma once

#include <string>

namespace tradediff {

enum class Verbosity { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

void set_verbosity(Verbosity v);
Verbosity verbosity();

/// Messages go to stderr when the current verbosity admits them.
void log_warn(const std::string& message);
void log_info(const std::string& message);
void log_debug(const std::string& message);

}  // namespace tradediff
