#pragma once

#include <cstdint>

namespace apexcvx {

// Execution policy for the data-parallel loops. `serial` is the reference
// path; `parallel` uses OpenMP when the library was built with it.
enum class Exec : std::uint8_t { serial, parallel };

bool openmp_enabled();
int max_threads();

}  // namespace apexcvx
