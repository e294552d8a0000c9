#pragma once

#include <spdlog/logger.h>

namespace apexcvx::detail {

spdlog::logger& log();

}  // namespace apexcvx::detail
