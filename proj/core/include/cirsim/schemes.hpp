#pragma once

#include <string_view>

#include "cirsim/model.hpp"

namespace cirsim {

// One-step maps. All randomness arrives through `dw`, the Brownian increment
// over a step of length `h`.

// Explicit Euler-Maruyama for the transformed SDE:
//   y + h (alpha / y + beta y) + gamma dw.
// The result may be non-positive; the hybrid controller decides what to do.
double explicit_map(const CirModel& model, double y, double dw, double h);

// Drift-implicit square-root scheme, the positive root of
//   Y' = y + h (alpha / Y' + beta Y') + gamma dw.
// Strictly positive whenever alpha > 0.
double backstop_map(const CirModel& model, double y, double dw, double h);

// Semi-implicit variant: (1 - beta h)^-1 (y + h alpha / y + gamma dw).
double sia_map(const CirModel& model, double y, double dw, double h);

// X-space explicit Euler-Maruyama family
//   X~' = g0(x) + h kappa (lambda - g1(x)) + sigma sqrt(g2(x)) dw,  X' = g3(X~')
enum class EulerVariant {
    ExplicitEuler,       // (x, x, x, x)
    PartiallyTruncated,  // (x, x, x+, x)
    FullyTruncated,      // (x, x+, x+, x+)
    HighamMao,           // (x, x, |x|, x)
};

std::string_view to_string(EulerVariant v) noexcept;

// Auxiliary update X~' from the auxiliary state x (no g3 applied).
double euler_variant_auxiliary(const CirModel& model, EulerVariant variant, double x, double dw, double h);

// Reported value g3(x) of an auxiliary state.
double euler_variant_output(EulerVariant variant, double x) noexcept;

// g3 of the auxiliary update.
double euler_variant_step(const CirModel& model, EulerVariant variant, double x, double dw, double h);

}  // namespace cirsim
