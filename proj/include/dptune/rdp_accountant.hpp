#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dptune {

/// Parameters of the subsampled Gaussian mechanism composed over steps.
struct MechanismParams {
  double q = 0.0;            ///< per-step sampling rate, in (0, 1]
  double sigma = 0.0;        ///< noise multiplier, > 0
  std::int64_t steps = 0;    ///< noisy gradient steps, >= 0
};

/// Renyi-DP values (nats) over a strictly increasing set of integer orders.
struct RdpCurve {
  std::vector<int> orders;
  std::vector<double> values;
};

struct PrivacySpend {
  double epsilon = 0.0;
  double delta = 0.0;
};

/// The integer order grid used throughout: alpha in {2, ..., 64}.
std::span<const int> default_orders();

/// Per-step RDP of the subsampled Gaussian mechanism at integer order
/// alpha >= 2:
///   (1/(alpha-1)) * log( sum_{k=0..alpha} C(alpha,k) (1-q)^(alpha-k) q^k
///                        exp(k(k-1)/(2 sigma^2)) )
/// evaluated with log-sum-exp. Overflow surfaces as +infinity.
double rdp_step(double q, double sigma, int order);

/// Per-step curve over the given orders.
RdpCurve rdp_curve(double q, double sigma, std::span<const int> orders);

/// Linear RDP composition: each value multiplied by steps.
RdpCurve compose(const RdpCurve& per_step, std::int64_t steps);

/// Convert to (epsilon, delta): epsilon = min over finite orders of
/// rdp(alpha) + log(1/delta)/(alpha-1). Throws if no finite order remains.
/// The minimizing order is reported through minimizing_order when non-null.
PrivacySpend to_epsilon(const RdpCurve& curve, double delta,
                        int* minimizing_order = nullptr);

/// Audit payload for run logs: the composed curve and the chosen order.
struct AccountantAudit {
  RdpCurve composed;
  int minimizing_order = 0;
};

/// Full pipeline over the default order grid.
PrivacySpend epsilon_of_run(const MechanismParams& params, double delta,
                            AccountantAudit* audit = nullptr);

}  // namespace dptune
