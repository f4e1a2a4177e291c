#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fusionkit {

struct EMConfig {
  double tol = 1e-8;       // relative observed-data log-likelihood change
  int max_iters = 2000;
  int n_restarts = 10;     // mixtures only; single-family fits ignore it
  std::uint64_t seed = 0;
  std::string init_strategy = "moments";  // "moments" (single) / "kmeans" (mixtures)
};

struct GuardEvent {
  int iteration = 0;
  std::string kind;    // "delta_shrink", "covariance_floor", "restart_abandoned"
  std::string detail;
};

struct FitReport {
  std::string family;
  bool converged = false;
  int iterations = 0;
  double final_loglik = 0.0;
  std::vector<double> loglik_trace;
  std::vector<GuardEvent> guard_events;
  std::vector<double> restart_logliks;  // final loglik per restart (mixtures)
  int chosen_restart = 0;
  // The source displays omit the X-block normaliser; we divide by n and say so.
  std::string x_block_normaliser = "1/n";
};

}  // namespace fusionkit
