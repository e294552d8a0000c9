#pragma once

#include <string>

namespace apexcvx {

// Levels: trace, debug, info, warn, error, off. The default comes from the
// APEXCVX_LOG environment variable, falling back to "warn".
void set_log_level(const std::string& level);
void init_logging_from_env();

}  // namespace apexcvx
