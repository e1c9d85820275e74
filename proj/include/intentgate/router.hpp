#pragma once

#include <string>
#include <string_view>

namespace intentgate {

enum class StrategyKind { low, moderate, high, full, classifier_only, custom };

// Escalate iff score > tau. `full` and `classifier_only` are encoded as tau = -inf / +inf so
// the same strict comparison covers every strategy.
struct RoutingStrategy {
  StrategyKind kind = StrategyKind::moderate;
  double tau = 0.10;

  std::string name() const;  // round-trips through resolve_strategy
  bool routes_all() const noexcept { return kind == StrategyKind::full; }
  bool routes_none() const noexcept { return kind == StrategyKind::classifier_only; }
};

inline constexpr double kLowRoutingTau = 0.15;
inline constexpr double kModerateRoutingTau = 0.10;
inline constexpr double kHighRoutingTau = 0.05;

// Accepts low | moderate | high | full | classifier-only (or classifier_only) | tau=<f>.
RoutingStrategy resolve_strategy(std::string_view spec);
RoutingStrategy custom_strategy(double tau);

// Throws InvalidArgument on NaN.
bool route(double score, const RoutingStrategy& strategy);

}  // namespace intentgate
