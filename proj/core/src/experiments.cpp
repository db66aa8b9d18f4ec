#include "cirsim/experiments.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cirsim/error.hpp"
#include "cirsim/parallel.hpp"

namespace cirsim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs fn() and adds its duration to `acc` when timing is on.
template <typename Fn>
auto timed(bool timing, double& acc, Fn&& fn) {
    if (!timing) return fn();
    const auto start = Clock::now();
    auto result = fn();
    acc += seconds_since(start);
    return result;
}

constexpr std::array<Scheme, 3> kFixedSchemes{Scheme::EF, Scheme::FT, Scheme::IF};

struct AdaptivePathResult {
    double x_ref = 0.0;
    // Indexed [grid point][EA=0 / SIA=1].
    std::vector<std::array<TrajectorySummary, 2>> adaptive;
    std::vector<std::array<double, 2>> seconds;
};

struct FixedPathResult {
    // Indexed [grid point][EF, FT, IF].
    std::vector<std::array<double, 3>> x;
    std::vector<std::array<double, 3>> seconds;
};

std::uint64_t nearest_ticks(double h, double tick) {
    // Round half up, i.e. ties toward the larger step.
    const auto ticks = static_cast<std::uint64_t>(std::floor(h / tick + 0.5));
    return std::max<std::uint64_t>(ticks, 1);
}

}  // namespace

std::string_view to_string(Scheme s) noexcept {
    switch (s) {
        case Scheme::EA: return "EA";
        case Scheme::SIA: return "SIA";
        case Scheme::EF: return "EF";
        case Scheme::FT: return "FT";
        case Scheme::IF: return "IF";
    }
    return "?";
}

void require_fixed_scheme(Scheme scheme, std::uint64_t step_ticks) {
    if (scheme == Scheme::EA || scheme == Scheme::SIA) {
        throw ParameterError(fmt::format("{} is adaptive, not a fixed-step scheme", to_string(scheme)));
    }
    if (step_ticks == 0) throw ParameterError("fixed step must span at least one tick");
}

std::vector<PathOutcome> simulate_paths(const CirModel& model, const StepStrategy& strategy, AdaptiveScheme scheme,
                                        std::uint64_t paths, std::uint64_t seed, double horizon, unsigned threads) {
    return parallel_map(paths, threads, [&](std::uint64_t p) {
        const PathDriver driver(seed, p, strategy.resolution_exp(), horizon);
        const auto summary = with_brownian_source(
            driver, [&](const auto& src) { return simulate_summary(model, strategy, src, scheme); });
        return PathOutcome{p, summary};
    });
}

void validate(const ConvergenceConfig& c) {
    if (c.h_max_grid.empty()) throw ParameterError("h_max grid is empty");
    if (c.paths == 0) throw ParameterError("number of paths M must be >= 1");
    for (double h : c.h_max_grid) {
        (void)StepStrategy::make(c.kind, c.r, h, c.rho, c.resolution_exp, c.horizon);
    }
    if (!(c.model.alpha > 0.0)) {
        throw ParameterError(fmt::format("the drift-implicit reference needs 4 kappa lambda > sigma^2 (alpha = {})",
                                         c.model.alpha));
    }
}

std::vector<ConvergenceRow> run_convergence(const ConvergenceConfig& c) {
    validate(c);
    const std::size_t grid = c.h_max_grid.size();
    std::vector<StepStrategy> strategies;
    strategies.reserve(grid);
    for (double h : c.h_max_grid) {
        strategies.push_back(StepStrategy::make(c.kind, c.r, h, c.rho, c.resolution_exp, c.horizon));
    }
    const double tick = strategies.front().tick_length();
    const auto m = static_cast<double>(c.paths);

    // Pass 1: reference and adaptive schemes.
    const auto adaptive = parallel_map(c.paths, c.threads, [&](std::uint64_t p) {
        AdaptivePathResult res;
        res.adaptive.resize(grid);
        res.seconds.assign(grid, {0.0, 0.0});
        const PathDriver driver(c.seed, p, c.resolution_exp, c.horizon);
        with_brownian_source(driver, [&](const auto& src) {
            res.x_ref = reference_solution(c.model, src);
            for (std::size_t g = 0; g < grid; ++g) {
                res.adaptive[g][0] = timed(c.timing, res.seconds[g][0], [&] {
                    return simulate_summary(c.model, strategies[g], src, AdaptiveScheme::EA);
                });
                res.adaptive[g][1] = timed(c.timing, res.seconds[g][1], [&] {
                    return simulate_summary(c.model, strategies[g], src, AdaptiveScheme::SIA);
                });
            }
            return 0;
        });
        return res;
    });

    std::vector<ConvergenceRow> adaptive_rows;
    std::vector<std::uint64_t> fixed_ticks(grid);
    for (std::size_t g = 0; g < grid; ++g) {
        for (int s = 0; s < 2; ++s) {
            ConvergenceRow row{s == 0 ? Scheme::EA : Scheme::SIA, c.h_max_grid[g], 0.0, 0.0, 0.0, 0.0, 0.0,
                               c.paths, c.seed, c.resolution_exp};
            double sum_h = 0.0, sum_sq = 0.0, sum_x = 0.0;
            for (const auto& path : adaptive) {
                const TrajectorySummary& t = path.adaptive[g][s];
                sum_h += c.horizon / static_cast<double>(t.n_steps);
                const double err = path.x_ref - t.x_final();
                sum_sq += err * err;
                sum_x += t.x_final();
                row.wall_seconds += path.seconds[g][s];
                row.total_steps += t.n_steps;
                row.total_retake += t.n_retake;
                row.total_floor += t.n_floor;
                row.paths_with_retake += t.n_retake > 0 ? 1 : 0;
            }
            row.h_mean = sum_h / m;
            row.rmse = std::sqrt(sum_sq / m);
            row.mean_x = sum_x / m;
            row.pct_retake = 100.0 * static_cast<double>(row.total_retake) / static_cast<double>(row.total_steps);
            row.pct_floor = 100.0 * static_cast<double>(row.total_floor) / static_cast<double>(row.total_steps);
            if (s == 0) fixed_ticks[g] = nearest_ticks(row.h_mean, tick);
            adaptive_rows.push_back(row);
        }
    }

    // Pass 2: fixed-step schemes at the EA mean step.
    const auto fixed = parallel_map(c.paths, c.threads, [&](std::uint64_t p) {
        FixedPathResult res;
        res.x.resize(grid);
        res.seconds.assign(grid, {0.0, 0.0, 0.0});
        const PathDriver driver(c.seed, p, c.resolution_exp, c.horizon);
        with_brownian_source(driver, [&](const auto& src) {
            for (std::size_t g = 0; g < grid; ++g) {
                for (std::size_t k = 0; k < kFixedSchemes.size(); ++k) {
                    res.x[g][k] = timed(c.timing, res.seconds[g][k], [&] {
                        return simulate_fixed(c.model, kFixedSchemes[k], fixed_ticks[g], src);
                    });
                }
            }
            return 0;
        });
        return res;
    });

    std::vector<ConvergenceRow> rows;
    rows.reserve(grid * 5);
    for (std::size_t g = 0; g < grid; ++g) {
        rows.push_back(adaptive_rows[2 * g]);
        rows.push_back(adaptive_rows[2 * g + 1]);
        const double h_fixed = static_cast<double>(fixed_ticks[g]) * tick;
        const std::uint64_t total_ticks = std::uint64_t{1} << c.resolution_exp;
        const std::uint64_t steps_per_path = (total_ticks + fixed_ticks[g] - 1) / fixed_ticks[g];
        for (std::size_t k = 0; k < kFixedSchemes.size(); ++k) {
            ConvergenceRow row{kFixedSchemes[k], c.h_max_grid[g], h_fixed, 0.0, 0.0, 0.0, 0.0,
                               c.paths, c.seed, c.resolution_exp};
            double sum_sq = 0.0, sum_x = 0.0;
            for (std::uint64_t p = 0; p < c.paths; ++p) {
                const double err = adaptive[p].x_ref - fixed[p].x[g][k];
                sum_sq += err * err;
                sum_x += fixed[p].x[g][k];
                row.wall_seconds += fixed[p].seconds[g][k];
            }
            row.rmse = std::sqrt(sum_sq / m);
            row.mean_x = sum_x / m;
            row.total_steps = steps_per_path * c.paths;
            rows.push_back(row);
        }
    }
    return rows;
}

double fit_order(std::span<const double> h, std::span<const double> rmse) {
    if (h.size() != rmse.size()) throw ParameterError("fit_order: mismatched input lengths");
    if (h.size() < 3) throw ParameterError(fmt::format("fit_order needs >= 3 points (got {})", h.size()));
    const auto n = static_cast<double>(h.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0.0) || !(rmse[i] > 0.0)) {
            throw ParameterError(fmt::format("fit_order needs positive h and rmse (point {}: h={}, rmse={})", i,
                                             h[i], rmse[i]));
        }
        sx += std::log(h[i]);
        sy += std::log(rmse[i]);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double dx = std::log(h[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(rmse[i]) - my);
    }
    if (!(sxx > 0.0)) throw ParameterError("fit_order: all step sizes are equal");
    return sxy / sxx;
}

double fit_order(std::span<const ConvergenceRow> rows) {
    std::vector<double> h, e;
    for (const auto& r : rows) {
        h.push_back(r.h_mean);
        e.push_back(r.rmse);
    }
    return fit_order(h, e);
}

std::vector<ConvergenceRow> rows_for(std::span<const ConvergenceRow> rows, Scheme scheme) {
    std::vector<ConvergenceRow> out;
    for (const auto& r : rows) {
        if (r.scheme == scheme) out.push_back(r);
    }
    return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {lo};
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) {
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    v.back() = hi;
    return v;
}

void validate(const SweepConfig& s) {
    if (s.a_grid.empty()) throw ParameterError("a grid is empty");
    for (double a : s.a_grid) {
        ConvergenceConfig c = s.base;
        c.model = make_model_from_a(s.kappa, s.lambda, a, s.x0);
        validate(c);
        if (c.h_max_grid.size() < 3) throw ParameterError("order estimation needs at least 3 h_max values");
    }
}

std::vector<SweepRow> run_sweep(const SweepConfig& s) {
    validate(s);
    std::vector<SweepRow> out;
    for (double a : s.a_grid) {
        ConvergenceConfig c = s.base;
        c.model = make_model_from_a(s.kappa, s.lambda, a, s.x0);
        const auto rows = run_convergence(c);
        for (Scheme scheme : kAllSchemes) {
            const auto mine = rows_for(rows, scheme);
            std::uint64_t steps = 0, retake = 0, floor = 0;
            for (const auto& r : mine) {
                steps += r.total_steps;
                retake += r.total_retake;
                floor += r.total_floor;
            }
            const double denom = steps > 0 ? static_cast<double>(steps) : 1.0;
            out.push_back({a, c.model.sigma, scheme, fit_order(mine), 100.0 * static_cast<double>(retake) / denom,
                           100.0 * static_cast<double>(floor) / denom, c.paths, c.seed, c.resolution_exp});
        }
    }
    return out;
}

void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows) {
    out << "scheme,h_max,h_mean,rmse,wall_seconds,pct_retake,pct_floor,M,seed,K\n";
    for (const auto& r : rows) {
        fmt::print(out, "{},{},{},{},{},{},{},{},{},{}\n", to_string(r.scheme), r.h_max, r.h_mean, r.rmse,
                   r.wall_seconds, r.pct_retake, r.pct_floor, r.paths, r.seed, r.resolution_exp);
    }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "a,sigma,scheme,order,pct_retake,pct_floor,M,seed,K\n";
    for (const auto& r : rows) {
        fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", r.a, r.sigma, to_string(r.scheme), r.order, r.pct_retake,
                   r.pct_floor, r.paths, r.seed, r.resolution_exp);
    }
}

void write_positivity_csv(std::ostream& out, std::span<const PositivityRow> rows) {
    out << "rho,Q,R,kappa,lambda,sigma,epsilon,h_bar\n";
    for (const auto& r : rows) {
        fmt::print(out, "{},{},{},{},{},{},{},{:.3e}\n", r.rho, r.q, r.r_bound, r.kappa, r.lambda, r.sigma, r.epsilon,
                   r.h_bar);
    }
}

void write_surface_csv(std::ostream& out, std::span<const SurfacePoint> points) {
    out << "y,h_max,prob\n";
    for (const auto& p : points) fmt::print(out, "{},{},{}\n", p.y, p.h_max, p.prob);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
    out << "t,h,Y,X,provenance\n";
    fmt::print(out, "{},{},{},{},{}\n", tr.times[0], 0.0, tr.states[0], tr.states[0] * tr.states[0], "initial");
    for (std::size_t i = 0; i < tr.steps.size(); ++i) {
        const double y = tr.states[i + 1];
        fmt::print(out, "{},{},{},{},{}\n", tr.times[i + 1], tr.steps[i], y, y * y, to_string(tr.provenance[i]));
    }
}

}  // namespace cirsim
