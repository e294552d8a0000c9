#include "apexcvx/logging.hpp"

#include "log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <memory>

namespace apexcvx {
namespace detail {

spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("apexcvx");
    l->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    const char* env = std::getenv("APEXCVX_LOG");
    l->set_level(env != nullptr ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return *logger;
}

}  // namespace detail

void set_log_level(const std::string& level) {
  detail::log().set_level(spdlog::level::from_str(level));
}

void init_logging_from_env() {
  const char* env = std::getenv("APEXCVX_LOG");
  if (env != nullptr) set_log_level(env);
}

}  // namespace apexcvx
