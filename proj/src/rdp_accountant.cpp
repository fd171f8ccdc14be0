#include "dptune/rdp_accountant.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dptune/numerics.hpp"

namespace dptune {

namespace {

constexpr int kMinOrder = 2;
constexpr int kMaxOrder = 64;

std::array<int, kMaxOrder - kMinOrder + 1> make_default_orders() {
  std::array<int, kMaxOrder - kMinOrder + 1> orders{};
  for (int a = kMinOrder; a <= kMaxOrder; ++a) orders[a - kMinOrder] = a;
  return orders;
}

const auto kDefaultOrders = make_default_orders();

void validate(const MechanismParams& p) {
  if (!(p.q > 0.0 && p.q <= 1.0))
    throw std::invalid_argument("mechanism: q must be in (0, 1]");
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma))
    throw std::invalid_argument("mechanism: sigma must be > 0 and finite");
  if (p.steps < 0)
    throw std::invalid_argument("mechanism: steps must be >= 0");
}

}  // namespace

std::span<const int> default_orders() { return kDefaultOrders; }

double rdp_step(double q, double sigma, int order) {
  if (order < 2) throw std::invalid_argument("rdp_step: order must be >= 2");
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("rdp_step: q must be in [0, 1]");
  if (!(sigma >= 0.0)) throw std::invalid_argument("rdp_step: sigma must be >= 0");
  if (q == 0.0) return 0.0;

  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);  // -inf at q = 1
  const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);

  std::vector<double> log_terms;
  log_terms.reserve(static_cast<std::size_t>(order) + 1);
  for (int k = 0; k <= order; ++k) {
    if (q == 1.0 && k < order) continue;  // (1-q)^(order-k) = 0
    double t = log_binomial(order, k);
    if (k < order) t += static_cast<double>(order - k) * log_1mq;
    if (k > 0) t += static_cast<double>(k) * log_q;
    if (k >= 2) t += static_cast<double>(k) * static_cast<double>(k - 1) * inv_2s2;
    log_terms.push_back(t);
  }
  return log_sum_exp(log_terms) / static_cast<double>(order - 1);
}

RdpCurve rdp_curve(double q, double sigma, std::span<const int> orders) {
  RdpCurve curve;
  curve.orders.assign(orders.begin(), orders.end());
  curve.values.reserve(orders.size());
  for (const int a : orders) curve.values.push_back(rdp_step(q, sigma, a));
  return curve;
}

RdpCurve compose(const RdpCurve& per_step, std::int64_t steps) {
  if (steps < 0) throw std::invalid_argument("compose: steps must be >= 0");
  RdpCurve out;
  out.orders = per_step.orders;
  out.values.reserve(per_step.values.size());
  for (const double v : per_step.values)
    out.values.push_back(steps == 0 ? 0.0 : v * static_cast<double>(steps));
  return out;
}

PrivacySpend to_epsilon(const RdpCurve& curve, double delta,
                        int* minimizing_order) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("to_epsilon: delta must be in (0, 1)");
  if (curve.orders.size() != curve.values.size() || curve.orders.empty())
    throw std::invalid_argument("to_epsilon: malformed curve");

  const double log_inv_delta = std::log(1.0 / delta);
  double best = std::numeric_limits<double>::infinity();
  int best_order = 0;
  for (std::size_t i = 0; i < curve.orders.size(); ++i) {
    const double v = curve.values[i];
    if (!std::isfinite(v)) continue;
    const double eps = v + log_inv_delta / (curve.orders[i] - 1);
    if (eps < best) {
      best = eps;
      best_order = curve.orders[i];
    }
  }
  if (best_order == 0) throw std::domain_error("to_epsilon: no finite order");
  if (minimizing_order != nullptr) *minimizing_order = best_order;
  return {best, delta};
}

PrivacySpend epsilon_of_run(const MechanismParams& params, double delta,
                            AccountantAudit* audit) {
  validate(params);
  const RdpCurve composed =
      compose(rdp_curve(params.q, params.sigma, default_orders()), params.steps);
  int order = 0;
  const PrivacySpend spend = to_epsilon(composed, delta, &order);
  if (audit != nullptr) {
    audit->composed = composed;
    audit->minimizing_order = order;
  }
  return spend;
}

}  // namespace dptune
