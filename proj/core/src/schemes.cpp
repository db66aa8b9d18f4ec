#include "cirsim/schemes.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cirsim/error.hpp"

namespace cirsim {

namespace {

void require_step(double h) {
    if (!(h > 0.0)) throw ParameterError(fmt::format("step size must be > 0 (got {})", h));
}

void require_positive_state(double y) {
    if (!(y > 0.0)) throw DomainError(fmt::format("transformed state must be > 0 (got {})", y));
}

inline double pos(double x) noexcept { return std::max(0.0, x); }

}  // namespace

double explicit_map(const CirModel& model, double y, double dw, double h) {
    require_positive_state(y);
    require_step(h);
    return y + h * (model.alpha / y + model.beta * y) + model.gamma * dw;
}

double backstop_map(const CirModel& model, double y, double dw, double h) {
    require_positive_state(y);
    require_step(h);
    if (!(model.alpha > 0.0)) {
        throw DomainError(fmt::format("drift-implicit scheme needs alpha > 0 (got {})", model.alpha));
    }
    const double damp = 1.0 - model.beta * h;
    const double u = y + model.gamma * dw;
    const double half = u / (2.0 * damp);
    const double disc = std::sqrt(half * half + model.alpha * h / damp);
    // For u < 0 the sum half + disc cancels; use the product of the roots
    // (-alpha h / damp) instead.
    if (half >= 0.0) return half + disc;
    return (model.alpha * h / damp) / (disc - half);
}

double sia_map(const CirModel& model, double y, double dw, double h) {
    require_positive_state(y);
    require_step(h);
    return (y + h * model.alpha / y + model.gamma * dw) / (1.0 - model.beta * h);
}

std::string_view to_string(EulerVariant v) noexcept {
    switch (v) {
        case EulerVariant::ExplicitEuler: return "ExplicitEuler";
        case EulerVariant::PartiallyTruncated: return "PartiallyTruncated";
        case EulerVariant::FullyTruncated: return "FullyTruncated";
        case EulerVariant::HighamMao: return "HighamMao";
    }
    return "?";
}

double euler_variant_auxiliary(const CirModel& model, EulerVariant variant, double x, double dw, double h) {
    require_step(h);
    double g1 = x;
    double g2 = x;
    switch (variant) {
        case EulerVariant::ExplicitEuler:
            if (x < 0.0) throw DomainError(fmt::format("explicit Euler is undefined at x = {} < 0", x));
            break;
        case EulerVariant::PartiallyTruncated: g2 = pos(x); break;
        case EulerVariant::FullyTruncated:
            g1 = pos(x);
            g2 = pos(x);
            break;
        case EulerVariant::HighamMao: g2 = std::fabs(x); break;
    }
    return x + h * model.kappa * (model.lambda - g1) + model.sigma * std::sqrt(g2) * dw;
}

double euler_variant_output(EulerVariant variant, double x) noexcept {
    return variant == EulerVariant::FullyTruncated ? pos(x) : x;
}

double euler_variant_step(const CirModel& model, EulerVariant variant, double x, double dw, double h) {
    return euler_variant_output(variant, euler_variant_auxiliary(model, variant, x, dw, h));
}

}  // namespace cirsim
