// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cirsim/adaptive.hpp"
#include "cirsim/driver.hpp"
#include "cirsim/experiments.hpp"
#include "cirsim/model.hpp"
#include "cirsim/parallel.hpp"
#include "cirsim/positivity.hpp"
#include "cirsim/schemes.hpp"

namespace {

using namespace cirsim;
using Clock = std::chrono::steady_clock;

constexpr int kResolution = 18;
constexpr std::uint64_t kSeed = 42;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    fmt::print("{} {}: {}\n", ok ? "PASS" : "FAIL", name, detail);
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

CirModel kappa2() { return make_model(2.0, 0.05, 0.2, 4e-4); }
CirModel kappa1() { return make_model(1.0, 0.05, 0.2, 4e-4); }

void positivity_bound_table() {
    struct Entry {
        double rho, kappa, eps, expected;
    };
    const Entry entries[] = {
        {64, 2, 1e-2, 3.594e-3},   {64, 2, 1e-4, 3.547e-3},   {64, 2, 1e-6, 3.506e-3},
        {64, 1, 1e-2, 5.454e-3},   {64, 1, 1e-4, 5.341e-3},   {64, 1, 1e-6, 5.246e-3},
        {256, 2, 1e-2, 5.800e-4},  {256, 2, 1e-4, 5.755e-4},  {256, 2, 1e-6, 5.716e-4},
        {256, 1, 1e-2, 8.912e-4},  {256, 1, 1e-4, 8.804e-4},  {256, 1, 1e-6, 8.710e-4},
    };
    const auto t0 = Clock::now();
    int matched = 0;
    std::string misses;
    for (const auto& e : entries) {
        const CirModel m = e.kappa == 2 ? kappa2() : kappa1();
        const StrategyBounds b{StrategyKind::TwoSided, 1, 1.0, e.rho};
        const double v = hmax_bound(PositivityQuery::make(m, b, e.eps, 1.0)).value;
        const double scale = std::pow(10.0, std::floor(std::log10(e.expected)) - 3);
        if (std::llround(v / scale) == std::llround(e.expected / scale)) {
            ++matched;
        } else {
            misses += fmt::format(" [rho={} kappa={} eps={}: {:.4e} vs {:.3e}]", e.rho, e.kappa, e.eps, v, e.expected);
        }
    }
    const double elapsed = seconds_since(t0);
    report(matched == 12 && elapsed < 1.0, "positivity-bound table",
           fmt::format("{}/12 values match to 4 significant digits in {:.3f} s{}", matched, elapsed, misses));
}

void convergence() {
    ConvergenceConfig c;
    c.model = kappa2();
    c.h_max_grid = {0x1p-4, 0x1p-5, 0x1p-6, 0x1p-7, 0x1p-8, 0x1p-9};
    c.paths = 500;
    c.seed = kSeed;
    c.resolution_exp = kResolution;
    const auto t0 = Clock::now();
    const auto rows = run_convergence(c);
    const double elapsed = seconds_since(t0);

    struct Band {
        Scheme scheme;
        double lo, hi;
    };
    const Band bands[] = {{Scheme::EA, 0.75, 1.20}, {Scheme::SIA, 0.75, 1.20}, {Scheme::IF, 0.75, 1.20},
                          {Scheme::FT, 0.35, 0.70}};
    for (const auto& band : bands) {
        const double slope = fit_order(rows_for(rows, band.scheme));
        report(slope >= band.lo && slope <= band.hi, fmt::format("strong order {}", to_string(band.scheme)),
               fmt::format("fitted slope {:.4f}, required [{:.2f}, {:.2f}] (K={}, M={}, run {:.1f} s)", slope, band.lo,
                           band.hi, kResolution, c.paths, elapsed));
    }
    fmt::print("INFO strong order EF: fitted slope {:.4f}\n", fit_order(rows_for(rows, Scheme::EF)));

    std::uint64_t retakes = 0, steps = 0;
    for (const auto& r : rows) {
        if (r.scheme == Scheme::EA || r.scheme == Scheme::SIA) {
            retakes += r.total_retake;
            steps += r.total_steps;
        }
    }
    report(retakes == 0, "no backstop retakes (kappa=2)",
           fmt::format("{} retakes over {} adaptive steps", retakes, steps));

    bool finite = std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return std::isfinite(r.rmse); });
    report(finite, "convergence output finite", fmt::format("{} rows", rows.size()));
}

void retake_probability() {
    const CirModel m = kappa1();
    const StrategyBounds b{StrategyKind::TwoSided, 1, 1.0, 64.0};
    const double bound = hmax_bound(PositivityQuery::make(m, b, 1e-2, 1.0)).value;
    const auto s = StepStrategy::aligned_down(StrategyKind::TwoSided, 1, bound, 64, kResolution);
    constexpr std::uint64_t kPaths = 2000;
    const auto outcomes = simulate_paths(m, s, AdaptiveScheme::EA, kPaths, kSeed, 1.0, 0);
    const auto hit = std::count_if(outcomes.begin(), outcomes.end(),
                                   [](const PathOutcome& o) { return o.summary.n_retake > 0; });
    const double frac = static_cast<double>(hit) / static_cast<double>(kPaths);
    const double limit = 0.01 + 3.0 * std::sqrt(0.01 * 0.99 / static_cast<double>(kPaths));
    report(frac <= limit, "retake probability under the positivity bound",
           fmt::format("bound {:.4e}, aligned h_max {:.4e}, {} of {} paths retook (fraction {:.4f} <= {:.4f})", bound,
                       s.h_max(), hit, kPaths, frac, limit));
}

void moment() {
    const CirModel m = kappa2();
    const auto s = StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-7, 64, kResolution);
    constexpr std::uint64_t kPaths = 2000;
    const auto outcomes = simulate_paths(m, s, AdaptiveScheme::EA, kPaths, kSeed, 1.0, 0);
    double mean = 0.0;
    for (const auto& o : outcomes) mean += o.summary.x_final();
    mean /= kPaths;
    double var = 0.0;
    for (const auto& o : outcomes) var += (o.summary.x_final() - mean) * (o.summary.x_final() - mean);
    var /= kPaths - 1;
    const double se = std::sqrt(var / kPaths);
    const double exact = exact_mean(m, 1.0);
    const double z = (mean - exact) / se;
    report(std::fabs(z) <= 3.0, "mean of X(1)",
           fmt::format("sample mean {:.6f}, exact {:.6f}, standard error {:.2e}, z = {:.2f}", mean, exact, se, z));
}

void fuzz_suites() {
    const CirModel m = kappa2();
    constexpr int kCases = 1'000'000;
    {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> ys(0.0, 10.0), dws(-20.0, 20.0), hs(0.0, 1.0);
        int bad_sign = 0, bad_residual = 0;
        double worst = 0.0;
        for (int i = 0; i < kCases; ++i) {
            const double y = std::max(ys(rng), 1e-300), dw = dws(rng), h = std::max(hs(rng), 1e-300);
            const double next = backstop_map(m, y, dw, h);
            if (!(next > 0.0)) ++bad_sign;
            const double res = std::fabs(next - y - h * (m.alpha / next + m.beta * next) - m.gamma * dw);
            worst = std::max(worst, res);
            if (!(res < 1e-12)) ++bad_residual;
        }
        report(bad_sign == 0, "backstop positivity fuzz", fmt::format("{} cases, {} non-positive", kCases, bad_sign));
        report(bad_residual == 0, "backstop implicit residual",
               fmt::format("{} cases, max residual {:.2e}", kCases, worst));
    }
    {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> xs(-2.0, 2.0), dws(-5.0, 5.0), hs(1e-6, 1.0);
        int bad = 0;
        for (int i = 0; i < kCases; ++i) {
            const double x = xs(rng), dw = dws(rng), h = hs(rng);
            if (!(euler_variant_step(m, EulerVariant::FullyTruncated, x, dw, h) >= 0.0)) ++bad;
        }
        report(bad == 0, "fully truncated Euler non-negativity fuzz",
               fmt::format("{} cases, {} negative", kCases, bad));
    }
}

void increment_additivity() {
    std::mt19937_64 rng(11);
    int bad = 0, trials = 0;
    for (std::uint64_t p = 0; p < 4; ++p) {
        const PathDriver d(99, p, 16);
        const SampledPath sampled(d);
        const double whole = d.increment(0, d.tick_count());
        std::uniform_int_distribution<std::uint64_t> pick(0, d.tick_count());
        for (int t = 0; t < 40; ++t, ++trials) {
            std::vector<std::uint64_t> cuts{0, d.tick_count()};
            for (int k = 0; k < 1 + 5 * t; ++k) cuts.push_back(pick(rng));
            std::sort(cuts.begin(), cuts.end());
            double a = 0.0, b = 0.0;
            for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
                a += d.increment(cuts[k], cuts[k + 1]);
                b += sampled.increment(cuts[k], cuts[k + 1]);
            }
            if (a != whole || b != whole || sampled.increment(0, d.tick_count()) != whole) ++bad;
        }
    }
    report(bad == 0, "increment additivity and chunking", fmt::format("{} random partitions, {} mismatches", trials, bad));
}

void path_invariants() {
    struct Case {
        StrategyKind kind;
        int r;
        double h_max;
        std::uint64_t rho;
        AdaptiveScheme scheme;
        bool k2;
    };
    const Case cases[] = {{StrategyKind::OneSided, 1, 0x1p-4, 64, AdaptiveScheme::EA, true},
                          {StrategyKind::OneSided, 1, 0x1p-9, 64, AdaptiveScheme::SIA, true},
                          {StrategyKind::TwoSided, 1, 0x1p-5, 64, AdaptiveScheme::EA, false},
                          {StrategyKind::OneSided, 2, 0x1p-4, 64, AdaptiveScheme::EA, false},
                          {StrategyKind::TwoSided, 2, 0x1p-3, 16, AdaptiveScheme::SIA, true}};
    constexpr int kRes = 15;
    constexpr std::uint64_t kPaths = 200;
    std::uint64_t violations = 0, steps = 0;
    for (const auto& c : cases) {
        const CirModel m = c.k2 ? kappa2() : kappa1();
        const auto s = StepStrategy::make(c.kind, c.r, c.h_max, c.rho, kRes);
        const StrategyBounds b = s.bounds();
        const double n_min = std::floor(1.0 / s.h_max());
        const double n_max = std::ceil(1.0 / s.h_min());
        for (std::uint64_t p = 0; p < kPaths; ++p) {
            const SampledPath path(PathDriver(1234, p, kRes));
            const Trajectory tr = simulate(m, s, path, c.scheme);
            const auto n = static_cast<double>(tr.summary.n_steps);
            if (std::accumulate(tr.steps.begin(), tr.steps.end(), 0.0) != 1.0) ++violations;
            if (n < n_min || n > n_max) ++violations;
            for (std::size_t i = 0; i < tr.steps.size(); ++i, ++steps) {
                if (!(tr.states[i + 1] > 0.0)) ++violations;
                if (tr.provenance[i] == Provenance::BackstopFloor) continue;
                if (tr.states[i] < b.q()) ++violations;
                if (c.kind == StrategyKind::TwoSided && !(tr.states[i] < b.r_bound())) ++violations;
            }
        }
    }
    report(violations == 0, "path bounds, step sums and step counts",
           fmt::format("{} steps over {} paths, {} violations", steps, kPaths * std::size(cases), violations));
}

void thread_invariance() {
    ConvergenceConfig c;
    c.model = kappa2();
    c.h_max_grid = {0x1p-4, 0x1p-5, 0x1p-6, 0x1p-7};
    c.paths = 64;
    c.resolution_exp = 14;
    c.seed = 7;
    std::vector<std::string> outputs;
    for (unsigned threads : {1u, 2u, 8u}) {
        c.threads = threads;
        std::ostringstream os;
        write_convergence_csv(os, run_convergence(c));
        outputs.push_back(os.str());
    }
    const bool same = outputs[0] == outputs[1] && outputs[0] == outputs[2];
    report(same, "byte-identical output across 1, 2 and 8 threads",
           fmt::format("{} bytes of convergence CSV per run", outputs[0].size()));
}

void beyond_feller() {
    SweepConfig s;
    s.kappa = 2.0;
    s.lambda = 0.05;
    s.x0 = 4e-4;
    s.a_grid = {1.2, 1.4, 1.6};
    s.base.h_max_grid = {0x1p-4, 0x1p-5, 0x1p-6, 0x1p-7, 0x1p-8, 0x1p-9};
    s.base.paths = 50;
    s.base.resolution_exp = 15;
    s.base.seed = kSeed;
    const auto rows = run_sweep(s);
    const bool finite = std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) {
        return std::isfinite(r.order) && std::isfinite(r.pct_retake) && std::isfinite(r.pct_floor);
    });
    report(finite, "finite output for a > 1", fmt::format("{} sweep rows at a in {{1.2, 1.4, 1.6}}", rows.size()));
}

}  // namespace

int main() {
    const std::vector<std::function<void()>> checks{positivity_bound_table,  convergence,          retake_probability,
                                                    moment,  fuzz_suites,          increment_additivity,
                                                    path_invariants, thread_invariance, beyond_feller};
    for (const auto& check : checks) {
        try {
            check();
        } catch (const std::exception& e) {
            report(false, "unexpected exception", e.what());
        }
    }
    fmt::print("{} criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
