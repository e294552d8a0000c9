#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace apexcvx::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kSolverFailure = 3,
  kNotConverged = 4,
};

struct RunConfig {
  std::string track;  // CSV path, or fixture:<kind>
  std::string vehicle;
  std::string powertrain;
  std::size_t samples = 2000;
  double epsilon = 0.01;
  int max_iters = 15;
  std::string mode = "min-time";  // min-time fixed-line min-curvature apex ggv energy
  std::string scenario = "all";
  std::string fixed_line;  // channels.csv of a previous run
  std::optional<double> trust_radius;
  std::filesystem::path out = "out";
  unsigned seed = 7;

  // Throws std::invalid_argument on a bad combination.
  void validate() const;
};

// Runs one invocation; arguments exclude the program name. Machine-readable
// errors go to `out` as a single JSON line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace apexcvx::cli
