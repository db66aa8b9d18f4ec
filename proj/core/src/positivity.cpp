#include "cirsim/positivity.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cirsim/error.hpp"

namespace cirsim {

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double one_step_neg_prob(const CirModel& model, const StrategyBounds& strategy, double y) {
    if (strategy.kind != StrategyKind::OneSided) {
        throw ParameterError("one-step negativity probability is defined for the one-sided strategy only");
    }
    if (!(y > strategy.h_min())) {
        throw ParameterError(fmt::format("y = {} must exceed h_min = {}", y, strategy.h_min()));
    }
    const double h = strategy.h_max * std::min(1.0, std::pow(y, strategy.r));
    const double a = (-y - drift(model, y) * h) / (model.gamma * std::sqrt(h));
    return normal_cdf(a);
}

std::string_view to_string(BoundConvention c) noexcept {
    return c == BoundConvention::AsPrinted ? "as-printed" : "nmax";
}

PositivityQuery PositivityQuery::make(const CirModel& model, const StrategyBounds& strategy, double epsilon,
                                      double horizon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw ParameterError(fmt::format("epsilon must lie in (0, 1) (got {})", epsilon));
    }
    if (!std::isfinite(horizon) || !(horizon > 0.0)) {
        throw ParameterError(fmt::format("horizon must be finite and > 0 (got {})", horizon));
    }
    if (!(strategy.rho > 1.0) || strategy.r < 1) {
        throw ParameterError("positivity bound needs rho > 1 and r >= 1");
    }
    if (!std::isfinite(strategy.r_bound())) {
        throw ParameterError("positivity bound needs a finite upper path bound R (use the two-sided strategy)");
    }
    return {model, strategy, epsilon, horizon};
}

std::optional<double> g_function(const PositivityQuery& query, double h, BoundConvention convention) {
    if (!(h > 0.0) || !std::isfinite(h)) return std::nullopt;

    const CirModel& m = query.model;
    const double rho = query.strategy.rho;
    const double q = query.strategy.q();
    const double big_r = query.strategy.r_bound();

    double exponent = h / (rho * query.horizon);
    if (convention == BoundConvention::NmaxCeil) exponent = 1.0 / std::ceil(rho * query.horizon / h);

    // With u = (1 - eps)^exponent and d = 1 - u:  1 - (2u - 1)^2 = 4 d (1 - d).
    const double d = -std::expm1(exponent * std::log1p(-query.epsilon));
    const double arg = 4.0 * d * (1.0 - d);
    if (!(arg > 0.0) || arg > 1.0) return std::nullopt;
    const double log_arg = std::log(4.0 * d) + std::log1p(-d);

    const double lead = q / h + std::sqrt(h) * (m.alpha / (big_r * std::sqrt(rho)) + m.beta * big_r);
    return lead - std::sqrt(-2.0 * m.gamma * m.gamma * std::min(log_arg, 0.0));
}

HmaxBound hmax_bound(const PositivityQuery& query, BoundConvention convention) {
    auto positive = [&](double h) {
        const auto g = g_function(query, h, convention);
        return g.has_value() && *g > 0.0;
    };

    double lo = 1e-10;
    if (!positive(lo)) {
        throw DomainError("g is not positive at h = 1e-10; no positivity interval near zero");
    }
    double hi = lo;
    for (;;) {
        hi = std::min(2.0 * lo, 1.0);
        if (!positive(hi)) break;
        if (hi >= 1.0) return {1.0, true};
        lo = hi;
    }
    while (hi - lo > 1e-12 * lo) {
        const double mid = 0.5 * (lo + hi);
        (positive(mid) ? lo : hi) = mid;
    }
    return {lo, false};
}

}  // namespace cirsim
