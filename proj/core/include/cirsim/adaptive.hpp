#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "cirsim/driver.hpp"
#include "cirsim/model.hpp"
#include "cirsim/schemes.hpp"

namespace cirsim {

enum class StrategyKind {
    OneSided,  // h = max(h_min, h_max min(1, y^r))
    TwoSided,  // h = max(h_min, h_max min(y^r, y^-r))
};

std::string_view to_string(StrategyKind kind) noexcept;

// Continuous description of a path-bounded strategy. Used where tick
// alignment is irrelevant (analytic positivity bounds, probability surfaces).
struct StrategyBounds {
    StrategyKind kind;
    int r;
    double h_max;
    double rho;

    [[nodiscard]] double h_min() const noexcept { return h_max / rho; }
    // Lower path bound rho^(-1/r).
    [[nodiscard]] double q() const noexcept { return std::pow(rho, -1.0 / r); }
    // Upper path bound rho^(1/r); infinite for the one-sided rule.
    [[nodiscard]] double r_bound() const noexcept {
        return kind == StrategyKind::TwoSided ? std::pow(rho, 1.0 / r) : std::numeric_limits<double>::infinity();
    }
};

/**
 * Tick-aligned path-bounded timestepping strategy.
 *
 * Step sizes are whole numbers of driver ticks. h_max and h_min = h_max / rho
 * must both be tick multiples, rho must be a power of two greater than one and
 * h_max <= 1.
 */
class StepStrategy {
public:
    // Throws ParameterError if h_max or h_min is not a tick multiple.
    static StepStrategy make(StrategyKind kind, int r, double h_max, std::uint64_t rho, int resolution_exp,
                             double horizon = 1.0);

    // Rounds h_max down to the largest admissible value (a multiple of rho ticks).
    static StepStrategy aligned_down(StrategyKind kind, int r, double h_max, std::uint64_t rho, int resolution_exp,
                                     double horizon = 1.0);

    [[nodiscard]] std::uint64_t step_ticks(double y) const;
    [[nodiscard]] double step_size(double y) const { return static_cast<double>(step_ticks(y)) * tick_length_; }

    [[nodiscard]] StrategyKind kind() const noexcept { return kind_; }
    [[nodiscard]] int r() const noexcept { return r_; }
    [[nodiscard]] std::uint64_t rho() const noexcept { return rho_; }
    [[nodiscard]] std::uint64_t h_max_ticks() const noexcept { return h_max_ticks_; }
    [[nodiscard]] std::uint64_t h_min_ticks() const noexcept { return h_max_ticks_ / rho_; }
    [[nodiscard]] double h_max() const noexcept { return static_cast<double>(h_max_ticks_) * tick_length_; }
    [[nodiscard]] double h_min() const noexcept { return static_cast<double>(h_min_ticks()) * tick_length_; }
    [[nodiscard]] double tick_length() const noexcept { return tick_length_; }
    [[nodiscard]] int resolution_exp() const noexcept { return resolution_exp_; }
    [[nodiscard]] StrategyBounds bounds() const noexcept {
        return {kind_, r_, h_max(), static_cast<double>(rho_)};
    }

private:
    StepStrategy(StrategyKind kind, int r, std::uint64_t h_max_ticks, std::uint64_t rho, int resolution_exp,
                 double tick_length);

    StrategyKind kind_;
    int r_;
    std::uint64_t h_max_ticks_;
    std::uint64_t rho_;
    int resolution_exp_;
    double tick_length_;
};

// Core map used for non-floor steps.
enum class AdaptiveScheme {
    EA,   // explicit_map
    SIA,  // sia_map
};

std::string_view to_string(AdaptiveScheme s) noexcept;

enum class Provenance : std::uint8_t { Explicit, BackstopFloor, BackstopRetake };

std::string_view to_string(Provenance p) noexcept;

struct HybridState {
    std::uint64_t tick = 0;
    double y = 0.0;
};

struct StepRecord {
    std::uint64_t tick_from;
    std::uint64_t ticks;
    double h;
    double dw;
    double y_from;
    double y_to;
    Provenance provenance;
};

/**
 * One step of the hybrid method.
 *
 * The step is the strategy's choice truncated to hit the horizon. Steps of at
 * most h_min ticks go straight to the backstop. Otherwise the core map is
 * tried; a non-positive result is retaken with the backstop using the same
 * step and the same Brownian increment.
 */
template <BrownianSource Source>
StepRecord hybrid_advance(const CirModel& model, const StepStrategy& strategy, const Source& source,
                          AdaptiveScheme scheme, const HybridState& state) {
    const std::uint64_t remaining = source.tick_count() - state.tick;
    std::uint64_t ticks = strategy.step_ticks(state.y);
    if (ticks > remaining) ticks = remaining;
    const double h = static_cast<double>(ticks) * source.tick_length();
    const double dw = source.increment(state.tick, state.tick + ticks);

    StepRecord rec{state.tick, ticks, h, dw, state.y, 0.0, Provenance::Explicit};
    if (ticks <= strategy.h_min_ticks()) {
        rec.y_to = backstop_map(model, state.y, dw, h);
        rec.provenance = Provenance::BackstopFloor;
        return rec;
    }
    const double trial =
        scheme == AdaptiveScheme::EA ? explicit_map(model, state.y, dw, h) : sia_map(model, state.y, dw, h);
    if (trial > 0.0) {
        rec.y_to = trial;
        return rec;
    }
    rec.y_to = backstop_map(model, state.y, dw, h);
    rec.provenance = Provenance::BackstopRetake;
    return rec;
}

struct TrajectorySummary {
    double y_final = 0.0;
    std::uint64_t n_steps = 0;
    std::uint64_t n_explicit = 0;
    std::uint64_t n_floor = 0;
    std::uint64_t n_retake = 0;

    [[nodiscard]] double x_final() const noexcept { return y_final * y_final; }
};

struct Trajectory {
    // times[0] = 0 and states[0] = y0; steps, increments and provenance are
    // indexed by step, so they have one entry fewer.
    std::vector<double> times;
    std::vector<double> states;
    std::vector<double> steps;
    std::vector<double> increments;
    std::vector<Provenance> provenance;
    TrajectorySummary summary;

    [[nodiscard]] std::vector<double> x_states() const;
};

// Throws ParameterError unless the strategy was built for a grid with this tick length.
void check_grid(const StepStrategy& strategy, double source_tick_length);

// Runs the hybrid method over the whole horizon, calling `on_step` with each
// StepRecord.
template <BrownianSource Source, typename OnStep>
TrajectorySummary run_hybrid(const CirModel& model, const StepStrategy& strategy, const Source& source,
                             AdaptiveScheme scheme, OnStep&& on_step) {
    check_grid(strategy, source.tick_length());
    TrajectorySummary out;
    HybridState state{0, model.y0};
    const std::uint64_t end = source.tick_count();
    while (state.tick < end) {
        const StepRecord rec = hybrid_advance(model, strategy, source, scheme, state);
        on_step(rec);
        ++out.n_steps;
        switch (rec.provenance) {
            case Provenance::Explicit: ++out.n_explicit; break;
            case Provenance::BackstopFloor: ++out.n_floor; break;
            case Provenance::BackstopRetake: ++out.n_retake; break;
        }
        state = {state.tick + rec.ticks, rec.y_to};
    }
    out.y_final = state.y;
    return out;
}

template <BrownianSource Source>
TrajectorySummary simulate_summary(const CirModel& model, const StepStrategy& strategy, const Source& source,
                                   AdaptiveScheme scheme) {
    return run_hybrid(model, strategy, source, scheme, [](const StepRecord&) {});
}

template <BrownianSource Source>
Trajectory simulate(const CirModel& model, const StepStrategy& strategy, const Source& source,
                    AdaptiveScheme scheme) {
    Trajectory tr;
    tr.times.push_back(0.0);
    tr.states.push_back(model.y0);
    tr.summary = run_hybrid(model, strategy, source, scheme, [&](const StepRecord& rec) {
        tr.times.push_back(source.time_at(rec.tick_from + rec.ticks));
        tr.states.push_back(rec.y_to);
        tr.steps.push_back(rec.h);
        tr.increments.push_back(rec.dw);
        tr.provenance.push_back(rec.provenance);
    });
    return tr;
}

}  // namespace cirsim
