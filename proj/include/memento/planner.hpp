#pragma once

#include <cstdint>
#include <vector>

namespace memento::planner {

/// Inverse standard normal CDF: Z with Phi(Z) = p, |error| < 1e-9.
double z_score(double p);

/// Standard normal CDF.
double normal_cdf(double z);

struct TauResult {
  double tau = 1.0;
  bool clamped = false;  // the formula exceeded 1
};

/// Smallest Full-update probability for (eps_s, delta) window frequency
/// estimation: Z_{1-delta/4} / (W eps_s^2), clamped to 1.
TauResult min_tau_hh(double window, double eps_s, double delta);

/// Same for hierarchical heavy hitters: Z_{1-delta/2} H / (W eps_s^2).
TauResult min_tau_hhh(double window, double eps_s, double delta, int hierarchy_size);

/// Sampling error reached at probability tau: sqrt(Z_{1-delta/2} H / (W tau)).
double eps_s_for_tau(double window, double tau, double delta, int hierarchy_size);

/// eps_a / (1 + eps_s): per-sketch error that absorbs oversampling.
double oversample_adjust(double eps_a, double eps_s);

struct DeploymentParams {
  double points = 10;          // m
  double overhead_bytes = 64;  // per-message header
  double sample_bytes = 4;     // E
  double budget = 1;           // bytes per ingress packet
  double window = 1e6;         // W
  int hierarchy_size = 5;      // H
  double delta_s = 1e-4;
};

void validate(const DeploymentParams& p);

struct ErrorBudget {
  std::uint64_t batch = 1;
  double tau = 1.0;
  bool tau_clamped = false;  // budget exceeds full sampling
  double delay_error = 0;    // m b / tau
  double sampling_error = 0;
  double total_error = 0;
};

/// Overall network-wide error for batch size b under the bandwidth budget.
ErrorBudget error_bound(std::uint64_t batch, const DeploymentParams& p);

/// Integer batch size minimising total_error over [1, max_batch].
ErrorBudget optimal_batch(const DeploymentParams& p, std::uint64_t max_batch = 1'000'000);

/// error_bound for every b in [1, max_batch] (for plotting / cross-checks).
std::vector<ErrorBudget> error_curve(const DeploymentParams& p, std::uint64_t max_batch);

}  // namespace memento::planner
