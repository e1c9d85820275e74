#include "intentgate/router.hpp"

#include "intentgate/error.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace intentgate {

std::string RoutingStrategy::name() const {
  switch (kind) {
    case StrategyKind::low: return "low";
    case StrategyKind::moderate: return "moderate";
    case StrategyKind::high: return "high";
    case StrategyKind::full: return "full";
    case StrategyKind::classifier_only: return "classifier-only";
    case StrategyKind::custom: {
      std::ostringstream out;
      out.precision(17);
      out << "tau=" << tau;
      return out.str();
    }
  }
  return "unknown";
}

RoutingStrategy custom_strategy(double tau) {
  if (!std::isfinite(tau)) throw InvalidArgument("routing threshold must be finite");
  return {StrategyKind::custom, tau};
}

RoutingStrategy resolve_strategy(std::string_view spec) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (spec == "low") return {StrategyKind::low, kLowRoutingTau};
  if (spec == "moderate") return {StrategyKind::moderate, kModerateRoutingTau};
  if (spec == "high") return {StrategyKind::high, kHighRoutingTau};
  if (spec == "full") return {StrategyKind::full, -inf};
  if (spec == "classifier-only" || spec == "classifier_only") return {StrategyKind::classifier_only, inf};
  if (spec.starts_with("tau=")) {
    const auto text = spec.substr(4);
    double tau = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), tau);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
      throw InvalidArgument("invalid routing threshold '" + std::string(text) + "'");
    }
    return custom_strategy(tau);
  }
  throw InvalidArgument("unknown routing strategy '" + std::string(spec) +
                        "' (low|moderate|high|full|classifier-only|tau=<f>)");
}

bool route(double score, const RoutingStrategy& strategy) {
  if (std::isnan(score)) throw InvalidArgument("route: NaN uncertainty score");
  if (strategy.routes_all()) return true;
  if (strategy.routes_none()) return false;
  return score > strategy.tau;
}

}  // namespace intentgate
