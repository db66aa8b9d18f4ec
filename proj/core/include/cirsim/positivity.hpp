#pragma once

#include <optional>
#include <string_view>

#include "cirsim/adaptive.hpp"
#include "cirsim/model.hpp"

namespace cirsim {

// Standard normal CDF.
double normal_cdf(double x) noexcept;

// Probability that one explicit step of the one-sided (r, h_max) rule, taken
// from Y_n = y, lands below zero:
//   Phi(a(y)),  a(y) = (-y - f(y) h) / (gamma sqrt(h)),  h = h_max min(1, y^r).
// Requires y > h_min and a one-sided strategy.
double one_step_neg_prob(const CirModel& model, const StrategyBounds& strategy, double y);

// Which exponent the trajectory-level bound raises (1 - eps) to.
enum class BoundConvention {
    AsPrinted,  // h / (rho T)
    NmaxCeil,   // 1 / ceil(rho T / h), the integer step-count bound
};

std::string_view to_string(BoundConvention c) noexcept;

/**
 * Inputs to the trajectory-level positivity bound. Requires a finite upper
 * path bound (two-sided strategy) and 0 < epsilon < 1. Only kind, r and rho
 * of `strategy` are used.
 */
struct PositivityQuery {
    CirModel model;
    StrategyBounds strategy;
    double epsilon;
    double horizon;

    static PositivityQuery make(const CirModel& model, const StrategyBounds& strategy, double epsilon,
                                double horizon);
};

/**
 * g(h) = Q/h + sqrt(h) (alpha / (R sqrt(rho)) + beta R)
 *        - sqrt(-2 gamma^2 ln(1 - (2 (1 - eps)^(h / (rho T)) - 1)^2))
 *
 * Returns nullopt when h <= 0 or the logarithm's argument leaves (0, 1].
 */
std::optional<double> g_function(const PositivityQuery& query, double h,
                                 BoundConvention convention = BoundConvention::AsPrinted);

struct HmaxBound {
    double value;
    // g stayed positive on all of (0, 1); value is 1.
    bool saturated;
};

// Right end of the first positivity interval of g, found by doubling from
// 1e-10 and bisecting to a relative width of 1e-12.
HmaxBound hmax_bound(const PositivityQuery& query, BoundConvention convention = BoundConvention::AsPrinted);

}  // namespace cirsim
