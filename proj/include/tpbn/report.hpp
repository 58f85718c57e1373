#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tpbn {

/// Engine-independent summary of a fit.
struct FitReport {
  std::string method;
  Eigen::VectorXd beta;  ///< point estimate (posterior mean or MAP)
  double sigma2 = 0.0;
  std::optional<double> phi;

  // Per-coefficient posterior summaries; empty when the engine has none.
  Eigen::VectorXd beta_sd;
  Eigen::VectorXd beta_lower;
  Eigen::VectorXd beta_upper;

  std::size_t iterations = 0;
  std::size_t draws = 0;
  bool converged = true;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace tpbn
