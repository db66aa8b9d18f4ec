#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cirsim/adaptive.hpp"
#include "cirsim/driver.hpp"
#include "cirsim/model.hpp"
#include "cirsim/schemes.hpp"

namespace cirsim {

enum class Scheme { EA, SIA, EF, FT, IF };

inline constexpr Scheme kAllSchemes[] = {Scheme::EA, Scheme::SIA, Scheme::EF, Scheme::FT, Scheme::IF};

std::string_view to_string(Scheme s) noexcept;

// Resolutions up to this exponent are materialised per path; above it,
// increments are summed on the fly.
inline constexpr int kMaterialiseLimit = 22;

// Calls fn(source) with either a SampledPath or the PathDriver itself.
template <typename Fn>
decltype(auto) with_brownian_source(const PathDriver& driver, Fn&& fn) {
    if (driver.resolution_exp() <= kMaterialiseLimit) {
        const SampledPath path(driver);
        return fn(path);
    }
    return fn(driver);
}

// Drift-implicit scheme stepped on every tick of the source; returns X(T).
template <BrownianSource Source>
double reference_solution(const CirModel& model, const Source& source) {
    const double h = source.tick_length();
    const std::uint64_t n = source.tick_count();
    double y = model.y0;
    for (std::uint64_t i = 0; i < n; ++i) y = backstop_map(model, y, source.increment(i, i + 1), h);
    return y * y;
}

/**
 * Fixed-step run of EF (Higham-Mao), FT or IF with `step_ticks` ticks per
 * step; the last step is shortened to end at the horizon. The Euler schemes
 * carry the auxiliary state and report g3 of it at T. Returns X(T).
 * Adaptive schemes are rejected.
 */
void require_fixed_scheme(Scheme scheme, std::uint64_t step_ticks);

template <BrownianSource Source>
double simulate_fixed(const CirModel& model, Scheme scheme, std::uint64_t step_ticks, const Source& source) {
    require_fixed_scheme(scheme, step_ticks);
    const std::uint64_t n = source.tick_count();
    const double tick = source.tick_length();
    double state = scheme == Scheme::IF ? model.y0 : model.x0;
    for (std::uint64_t t = 0; t < n;) {
        const std::uint64_t len = std::min(step_ticks, n - t);
        const double h = static_cast<double>(len) * tick;
        const double dw = source.increment(t, t + len);
        switch (scheme) {
            case Scheme::IF: state = backstop_map(model, state, dw, h); break;
            case Scheme::EF: state = euler_variant_auxiliary(model, EulerVariant::HighamMao, state, dw, h); break;
            case Scheme::FT: state = euler_variant_auxiliary(model, EulerVariant::FullyTruncated, state, dw, h); break;
            default: break;
        }
        t += len;
    }
    if (scheme == Scheme::IF) return state * state;
    return euler_variant_output(scheme == Scheme::FT ? EulerVariant::FullyTruncated : EulerVariant::HighamMao, state);
}

// Per-path result of one adaptive Monte Carlo run.
struct PathOutcome {
    std::uint64_t path_index;
    TrajectorySummary summary;
};

// Simulates paths [0, paths) of the hybrid method; results in path order.
std::vector<PathOutcome> simulate_paths(const CirModel& model, const StepStrategy& strategy, AdaptiveScheme scheme,
                                        std::uint64_t paths, std::uint64_t seed, double horizon, unsigned threads);

struct ConvergenceConfig {
    CirModel model;
    StrategyKind kind = StrategyKind::OneSided;
    int r = 1;
    std::uint64_t rho = 64;
    std::vector<double> h_max_grid;
    std::uint64_t paths = 500;
    std::uint64_t seed = 42;
    int resolution_exp = 18;
    double horizon = 1.0;
    unsigned threads = 0;
    bool timing = false;
};

struct ConvergenceRow {
    Scheme scheme;
    // Grid value of the experiment; fixed-step rows share it with the
    // adaptive rows they were matched against.
    double h_max;
    // Adaptive: mean step size. Fixed-step: the step actually used.
    double h_mean;
    double rmse;
    double wall_seconds;
    double pct_retake;
    double pct_floor;
    std::uint64_t paths;
    std::uint64_t seed;
    int resolution_exp;

    // Not part of the CSV.
    std::uint64_t total_steps = 0;
    std::uint64_t total_retake = 0;
    std::uint64_t total_floor = 0;
    std::uint64_t paths_with_retake = 0;
    double mean_x = 0.0;
};

// Throws ParameterError for any invalid part of the configuration; performs
// no simulation work.
void validate(const ConvergenceConfig& config);

/**
 * For each h_max: EA and SIA over all paths against a per-path drift-implicit
 * reference on the fine grid, then IF, EF and FT at the tick-rounded EA mean
 * step. All schemes share the Brownian path of each path index. Rows come out
 * grouped by h_max in the order EA, SIA, EF, FT, IF.
 */
std::vector<ConvergenceRow> run_convergence(const ConvergenceConfig& config);

// Least-squares slope of log(rmse) against log(h_mean).
double fit_order(std::span<const double> h, std::span<const double> rmse);
double fit_order(std::span<const ConvergenceRow> rows);

// Rows of one scheme, in grid order.
std::vector<ConvergenceRow> rows_for(std::span<const ConvergenceRow> rows, Scheme scheme);

// `count` equally spaced points from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t count);

struct SweepConfig {
    double kappa = 2.0;
    double lambda = 0.05;
    double x0 = 4e-4;
    std::vector<double> a_grid;
    ConvergenceConfig base;  // model is replaced per grid point
};

struct SweepRow {
    double a;
    double sigma;
    Scheme scheme;
    double order;
    double pct_retake;
    double pct_floor;
    std::uint64_t paths;
    std::uint64_t seed;
    int resolution_exp;
};

void validate(const SweepConfig& config);
std::vector<SweepRow> run_sweep(const SweepConfig& config);

struct PositivityRow {
    double rho;
    double q;
    double r_bound;
    double kappa;
    double lambda;
    double sigma;
    double epsilon;
    double h_bar;
};

struct SurfacePoint {
    double y;
    double h_max;
    double prob;
};

// CSV writers. Headers are fixed; numbers use the shortest round-trip form.
void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_positivity_csv(std::ostream& out, std::span<const PositivityRow> rows);
void write_surface_csv(std::ostream& out, std::span<const SurfacePoint> points);
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace cirsim
