#include "cirsim/adaptive.hpp"

#include <bit>

#include <fmt/format.h>

#include "cirsim/error.hpp"

namespace cirsim {

namespace {

void validate_common(int r, std::uint64_t rho, int resolution_exp, double horizon) {
    if (r < 1) throw ParameterError(fmt::format("strategy exponent r must be >= 1 (got {})", r));
    if (rho < 2 || !std::has_single_bit(rho)) {
        throw ParameterError(fmt::format("rho must be a power of two > 1 (got {})", rho));
    }
    if (resolution_exp < 1 || resolution_exp > kMaxResolutionExp) {
        throw ParameterError(fmt::format("resolution exponent must be in [1, {}] (got {})", kMaxResolutionExp,
                                         resolution_exp));
    }
    if (!std::isfinite(horizon) || !(horizon > 0.0)) {
        throw ParameterError(fmt::format("horizon must be finite and > 0 (got {})", horizon));
    }
}

}  // namespace

std::string_view to_string(StrategyKind kind) noexcept {
    return kind == StrategyKind::OneSided ? "one-sided" : "two-sided";
}

std::string_view to_string(AdaptiveScheme s) noexcept { return s == AdaptiveScheme::EA ? "EA" : "SIA"; }

std::string_view to_string(Provenance p) noexcept {
    switch (p) {
        case Provenance::Explicit: return "explicit";
        case Provenance::BackstopFloor: return "backstop-floor";
        case Provenance::BackstopRetake: return "backstop-retake";
    }
    return "?";
}

StepStrategy::StepStrategy(StrategyKind kind, int r, std::uint64_t h_max_ticks, std::uint64_t rho,
                           int resolution_exp, double tick_length)
    : kind_(kind), r_(r), h_max_ticks_(h_max_ticks), rho_(rho), resolution_exp_(resolution_exp),
      tick_length_(tick_length) {}

StepStrategy StepStrategy::make(StrategyKind kind, int r, double h_max, std::uint64_t rho, int resolution_exp,
                                double horizon) {
    validate_common(r, rho, resolution_exp, horizon);
    if (!std::isfinite(h_max) || !(h_max > 0.0) || h_max > 1.0) {
        throw ParameterError(fmt::format("h_max must be in (0, 1] (got {})", h_max));
    }
    const double tick = std::ldexp(horizon, -resolution_exp);
    const double ticks = h_max / tick;
    if (ticks != std::floor(ticks) || ticks > std::ldexp(1.0, resolution_exp)) {
        throw ParameterError(fmt::format("h_max = {} is not a tick multiple within the horizon (tick = 2^-{} T)",
                                         h_max, resolution_exp));
    }
    const auto n = static_cast<std::uint64_t>(ticks);
    if (n % rho != 0) {
        throw ParameterError(
            fmt::format("h_min = h_max / rho = {} is not a tick multiple (tick = 2^-{} T)", h_max / rho,
                        resolution_exp));
    }
    return StepStrategy(kind, r, n, rho, resolution_exp, tick);
}

StepStrategy StepStrategy::aligned_down(StrategyKind kind, int r, double h_max, std::uint64_t rho,
                                        int resolution_exp, double horizon) {
    validate_common(r, rho, resolution_exp, horizon);
    if (!std::isfinite(h_max) || !(h_max > 0.0) || h_max > 1.0) {
        throw ParameterError(fmt::format("h_max must be in (0, 1] (got {})", h_max));
    }
    const double tick = std::ldexp(horizon, -resolution_exp);
    const auto ticks = static_cast<std::uint64_t>(std::floor(h_max / tick));
    const std::uint64_t aligned = std::min(ticks, std::uint64_t{1} << resolution_exp) / rho * rho;
    if (aligned == 0) {
        throw ParameterError(fmt::format("h_max = {} is below rho ticks at resolution 2^-{}", h_max, resolution_exp));
    }
    return StepStrategy(kind, r, aligned, rho, resolution_exp, tick);
}

std::uint64_t StepStrategy::step_ticks(double y) const {
    if (!(y > 0.0)) throw DomainError(fmt::format("step size requested at non-positive state {}", y));
    const double yr = std::pow(y, r_);
    const double factor = kind_ == StrategyKind::OneSided ? std::min(1.0, yr) : std::min(yr, 1.0 / yr);
    const double raw = std::floor(static_cast<double>(h_max_ticks_) * factor);
    const std::uint64_t lo = h_min_ticks();
    if (!(raw > static_cast<double>(lo))) return lo;
    return std::min(static_cast<std::uint64_t>(raw), h_max_ticks_);
}

void check_grid(const StepStrategy& strategy, double source_tick_length) {
    if (strategy.tick_length() != source_tick_length) {
        throw ParameterError(fmt::format("strategy tick {} does not match Brownian source tick {}",
                                         strategy.tick_length(), source_tick_length));
    }
}

std::vector<double> Trajectory::x_states() const {
    std::vector<double> x;
    x.reserve(states.size());
    for (double y : states) x.push_back(y * y);
    return x;
}

}  // namespace cirsim
