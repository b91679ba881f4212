#include "memento/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "memento/common.hpp"

namespace memento::planner {
namespace {

// Acklam's rational approximation of the normal quantile (relative error
// 1.15e-9), polished below with one Halley step against erfc.
double acklam(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  if (p < low) {
    const double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - low) {
    const double q = std::sqrt(-2 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

ErrorBudget evaluate(double batch, const DeploymentParams& p) {
  ErrorBudget out;
  out.batch = static_cast<std::uint64_t>(std::llround(batch));
  const double message = p.overhead_bytes + p.sample_bytes * batch;
  double tau = p.budget * batch / message;
  if (tau > 1.0) {
    tau = 1.0;
    out.tau_clamped = true;
  }
  out.tau = tau;
  const double z = z_score(1 - p.delta_s / 2);
  out.delay_error = p.points * batch / tau;
  out.sampling_error = std::sqrt(p.hierarchy_size * p.window * z / tau);
  out.total_error = out.delay_error + out.sampling_error;
  return out;
}

bool better(const ErrorBudget& a, const ErrorBudget& b) {
  return a.total_error < b.total_error || (a.total_error == b.total_error && a.batch < b.batch);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double z_score(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("quantile level must lie in (0, 1)");
  double x = acklam(p);
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
  x -= u / (1 + x * u / 2);
  return x;
}

TauResult min_tau_hh(double window, double eps_s, double delta) {
  if (!(window > 0) || !(eps_s > 0 && eps_s < 1) || !(delta > 0 && delta < 1)) {
    throw ConfigError("min_tau_hh: W > 0, eps_s and delta in (0, 1) required");
  }
  const double tau = z_score(1 - delta / 4) / (window * eps_s * eps_s);
  return tau > 1.0 ? TauResult{1.0, true} : TauResult{tau, false};
}

TauResult min_tau_hhh(double window, double eps_s, double delta, int hierarchy_size) {
  if (!(window > 0) || !(eps_s > 0 && eps_s < 1) || !(delta > 0 && delta < 1) || hierarchy_size < 1) {
    throw ConfigError("min_tau_hhh: W > 0, H >= 1, eps_s and delta in (0, 1) required");
  }
  const double tau = z_score(1 - delta / 2) * hierarchy_size / (window * eps_s * eps_s);
  return tau > 1.0 ? TauResult{1.0, true} : TauResult{tau, false};
}

double eps_s_for_tau(double window, double tau, double delta, int hierarchy_size) {
  if (!(tau > 0 && tau <= 1) || !(window > 0)) throw ConfigError("eps_s_for_tau: tau in (0, 1] required");
  return std::sqrt(z_score(1 - delta / 2) * hierarchy_size / (window * tau));
}

double oversample_adjust(double eps_a, double eps_s) {
  if (!(eps_a > 0 && eps_a < 1) || !(eps_s >= 0 && eps_s < 1)) {
    throw ConfigError("oversample_adjust: eps_a in (0, 1) and eps_s in [0, 1) required");
  }
  return eps_a / (1 + eps_s);
}

void validate(const DeploymentParams& p) {
  if (!(p.points > 0) || !(p.overhead_bytes > 0) || !(p.sample_bytes > 0) || !(p.budget > 0) ||
      !(p.window > 0) || p.hierarchy_size < 1 || !(p.delta_s > 0 && p.delta_s < 1)) {
    throw ConfigError("deployment parameters must be strictly positive (delta_s in (0, 1))");
  }
}

ErrorBudget error_bound(std::uint64_t batch, const DeploymentParams& p) {
  validate(p);
  if (batch < 1) throw ConfigError("batch size must be at least 1");
  return evaluate(static_cast<double>(batch), p);
}

std::vector<ErrorBudget> error_curve(const DeploymentParams& p, std::uint64_t max_batch) {
  validate(p);
  std::vector<ErrorBudget> out;
  out.reserve(max_batch);
  for (std::uint64_t b = 1; b <= max_batch; ++b) out.push_back(evaluate(static_cast<double>(b), p));
  return out;
}

ErrorBudget optimal_batch(const DeploymentParams& p, std::uint64_t max_batch) {
  validate(p);
  if (max_batch < 2) throw ConfigError("max batch must be at least 2");
  const double hi_b = static_cast<double>(max_batch);
  auto f = [&](double b) { return evaluate(b, p).total_error; };

  // Unimodality probe on a geometric grid: the discrete slope may turn from
  // negative to positive once; anything else means a full scan.
  int turns = 0;
  {
    constexpr int kProbe = 96;
    double prev_value = f(1.0);
    int prev_sign = 0;
    for (int i = 1; i <= kProbe; ++i) {
      const double b = std::pow(hi_b, static_cast<double>(i) / kProbe);
      const double value = f(b);
      const int sign = value > prev_value ? 1 : (value < prev_value ? -1 : 0);
      if (sign != 0 && prev_sign != 0 && sign != prev_sign) ++turns;
      if (sign != 0) prev_sign = sign;
      prev_value = value;
    }
  }
  if (turns > 1) {
    ErrorBudget best = evaluate(1.0, p);
    for (std::uint64_t b = 2; b <= max_batch; ++b) {
      const ErrorBudget cand = evaluate(static_cast<double>(b), p);
      if (better(cand, best)) best = cand;
    }
    return best;
  }

  double lo = 1.0;
  double hi = hi_b;
  for (int it = 0; it < 300 && hi - lo > 1e-7; ++it) {
    const double m1 = lo + (hi - lo) / 3;
    const double m2 = hi - (hi - lo) / 3;
    if (f(m1) <= f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const auto centre = static_cast<std::uint64_t>(std::floor((lo + hi) / 2));
  ErrorBudget best = evaluate(static_cast<double>(std::max<std::uint64_t>(1, centre)), p);
  for (std::uint64_t b = centre > 1 ? centre - 1 : 1; b <= std::min(max_batch, centre + 2); ++b) {
    const ErrorBudget cand = evaluate(static_cast<double>(b), p);
    if (better(cand, best)) best = cand;
  }
  return best;
}

}  // namespace memento::planner
