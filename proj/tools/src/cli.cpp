#include "cirsim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cirsim/adaptive.hpp"
#include "cirsim/error.hpp"
#include "cirsim/experiments.hpp"
#include "cirsim/model.hpp"
#include "cirsim/positivity.hpp"

#ifndef CIRSIM_VERSION
#define CIRSIM_VERSION "0.0.0"
#endif

namespace cirsim::cli {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Exponent of a `2^k` token.
int parse_power_of_two_exponent(const std::string& text) {
    const std::string body = text.substr(2);
    std::size_t used = 0;
    int k = 0;
    try {
        k = std::stoi(body, &used);
    } catch (const std::exception&) {
        throw ParameterError(fmt::format("bad power of two '{}'", text));
    }
    if (used != body.size()) throw ParameterError(fmt::format("bad power of two '{}'", text));
    return k;
}

struct ModelFlags {
    double kappa = 2.0;
    double lambda = 0.05;
    double sigma = 0.2;
    double x0 = 4e-4;
    std::string config;
    std::map<std::string, CLI::Option*> given;
};

void add_model_flags(CLI::App* app, ModelFlags& f, bool with_sigma, bool with_x0 = true) {
    f.given["kappa"] = app->add_option("--kappa", f.kappa, "mean-reversion rate")->capture_default_str();
    f.given["lambda"] = app->add_option("--lambda", f.lambda, "long-run mean")->capture_default_str();
    if (with_sigma) f.given["sigma"] = app->add_option("--sigma", f.sigma, "volatility")->capture_default_str();
    if (with_x0) f.given["x0"] = app->add_option("--x0", f.x0, "initial value X(0)")->capture_default_str();
    app->add_option("--config", f.config, "key=value file with kappa, lambda, sigma, x0 (flags override)");
}

// Config file first, explicit flags on top.
void apply_config(ModelFlags& f) {
    if (f.config.empty()) return;
    const auto kv = read_key_value_file(f.config);
    std::map<std::string, double*> slots{
        {"kappa", &f.kappa}, {"lambda", &f.lambda}, {"sigma", &f.sigma}, {"x0", &f.x0}};
    for (const auto& [key, value] : kv) {
        const auto it = slots.find(key);
        if (it == slots.end()) throw ParameterError(fmt::format("unknown config key '{}'", key));
        const auto flag = f.given.find(key);
        if (flag != f.given.end() && flag->second->count() > 0) continue;
        *it->second = parse_number(value);
    }
}

CirModel resolve_model(ModelFlags& f) {
    apply_config(f);
    return make_model(f.kappa, f.lambda, f.sigma, f.x0);
}

struct GridFlags {
    std::string rho = "2^6";
    int r = 1;
    std::string strategy = "one-sided";
    std::uint64_t seed = 42;
    int resolution_exp = 18;
    double horizon = 1.0;
    unsigned threads = 0;
};

void add_strategy_flags(CLI::App* app, GridFlags& g, const std::string& default_strategy) {
    g.strategy = default_strategy;
    app->add_option("--rho", g.rho, "h_max / h_min (power of two, e.g. 64 or 2^6)")->capture_default_str();
    app->add_option("--r", g.r, "strategy exponent r >= 1")->capture_default_str();
    app->add_option("--strategy", g.strategy, "one-sided | two-sided")
        ->check(CLI::IsMember({"one-sided", "two-sided"}))
        ->capture_default_str();
    app->add_option("--T", g.horizon, "horizon T")->capture_default_str();
}

void add_sim_flags(CLI::App* app, GridFlags& g) {
    app->add_option("--seed", g.seed, "Brownian path seed")->capture_default_str();
    app->add_option("--resolution-exp", g.resolution_exp, "fine grid has 2^K ticks on [0, T]")
        ->capture_default_str();
    app->add_option("--threads", g.threads, "worker threads (0 = all cores); output does not depend on it")
        ->capture_default_str();
}

StrategyKind parse_kind(const std::string& s) {
    return s == "two-sided" ? StrategyKind::TwoSided : StrategyKind::OneSided;
}

std::uint64_t parse_rho(const std::string& s) {
    const double v = parse_number(s);
    if (!(v >= 2.0) || v != std::floor(v) || v > 0x1p62 ||
        (static_cast<std::uint64_t>(v) & (static_cast<std::uint64_t>(v) - 1)) != 0) {
        throw ParameterError(fmt::format("rho must be an integer power of two > 1 (got '{}')", s));
    }
    return static_cast<std::uint64_t>(v);
}

std::string provenance_line(const std::string& subcommand, const GridFlags& g,
                            const std::vector<std::pair<std::string, std::string>>& extra) {
    std::string line = fmt::format("# seed={} K={} version={} command={}", g.seed, g.resolution_exp,
                                   CIRSIM_VERSION, subcommand);
    for (const auto& [k, v] : extra) line += fmt::format(" {}={}", k, v);
    return line + "\n";
}

// Writes to --out if given, otherwise to the fallback stream.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
    if (path.empty()) {
        body(fallback);
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
    body(file);
    if (!file) throw std::runtime_error(fmt::format("write to '{}' failed", path));
}

std::string fmt_model(const CirModel& m) {
    return fmt::format("kappa={} lambda={} sigma={} x0={}", m.kappa, m.lambda, m.sigma, m.x0);
}

}  // namespace

double parse_number(const std::string& raw) {
    const std::string text = trim(raw);
    if (text.size() > 2 && text[0] == '2' && text[1] == '^') return std::ldexp(1.0, parse_power_of_two_exponent(text));
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ParameterError(fmt::format("'{}' is not a number", text));
    }
    if (used != text.size()) throw ParameterError(fmt::format("'{}' is not a number", text));
    return v;
}

std::vector<double> parse_grid(const std::string& raw) {
    const std::string text = trim(raw);
    if (text.empty()) throw ParameterError("empty grid");
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const std::string lo = trim(text.substr(0, dots));
        const std::string hi = trim(text.substr(dots + 2));
        if (lo.rfind("2^", 0) != 0 || hi.rfind("2^", 0) != 0) {
            throw ParameterError(fmt::format("range grids must look like 2^-4..2^-9 (got '{}')", text));
        }
        const int a = parse_power_of_two_exponent(lo);
        const int b = parse_power_of_two_exponent(hi);
        std::vector<double> out;
        const int stepdir = a <= b ? 1 : -1;
        for (int k = a;; k += stepdir) {
            out.push_back(std::ldexp(1.0, k));
            if (k == b) break;
        }
        return out;
    }
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
    return out;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adaptive and fixed-step simulation of the Cox-Ingersoll-Ross model", "cirsim"};
    app.require_subcommand(1);
    app.set_version_flag("--version", CIRSIM_VERSION);

    std::string out_path;

    // convergence
    ModelFlags conv_model;
    GridFlags conv_grid;
    std::string conv_hgrid = "2^-4..2^-9";
    std::uint64_t conv_m = 500;
    bool conv_timing = false;
    auto* conv = app.add_subcommand("convergence", "RMSE against a fine-grid reference for EA, SIA, EF, FT, IF");
    add_model_flags(conv, conv_model, true);
    add_strategy_flags(conv, conv_grid, "one-sided");
    add_sim_flags(conv, conv_grid);
    conv->add_option("--hmax-grid", conv_hgrid, "h_max values, e.g. 2^-4..2^-9")->capture_default_str();
    conv->add_option("--M", conv_m, "Monte Carlo paths")->capture_default_str();
    conv->add_flag("--timing", conv_timing, "measure per-scheme compute time (output no longer reproducible)");
    conv->add_option("--out", out_path, "output CSV (default stdout)");

    // sweep
    ModelFlags sweep_model;
    GridFlags sweep_grid;
    std::string sweep_hgrid = "2^-4..2^-9";
    std::uint64_t sweep_m = 500;
    double a_min = 0.04, a_max = 1.6;
    std::size_t a_points = 40;
    auto* sweep = app.add_subcommand("sweep", "estimated strong order against a = sigma^2 / (2 kappa lambda)");
    add_model_flags(sweep, sweep_model, false);
    add_strategy_flags(sweep, sweep_grid, "one-sided");
    add_sim_flags(sweep, sweep_grid);
    sweep->add_option("--hmax-grid", sweep_hgrid, "h_max values, e.g. 2^-4..2^-9")->capture_default_str();
    sweep->add_option("--M", sweep_m, "Monte Carlo paths")->capture_default_str();
    sweep->add_option("--a-min", a_min)->capture_default_str();
    sweep->add_option("--a-max", a_max)->capture_default_str();
    sweep->add_option("--a-points", a_points)->capture_default_str();
    sweep->add_option("--out", out_path, "output CSV (default stdout)");

    // positivity-bound
    ModelFlags pos_model;
    GridFlags pos_grid;
    std::string eps_list = "1e-2";
    std::string convention = "as-printed";
    auto* pos = app.add_subcommand("positivity-bound", "largest h_max keeping P[no retake] > 1 - eps");
    add_model_flags(pos, pos_model, true, false);
    add_strategy_flags(pos, pos_grid, "two-sided");
    pos->add_option("--eps", eps_list, "tolerance(s) in (0,1), comma separated")->capture_default_str();
    pos->add_option("--gh-convention", convention, "as-printed | nmax")
        ->check(CLI::IsMember({"as-printed", "nmax"}))
        ->capture_default_str();
    pos->add_option("--out", out_path, "output CSV (default stdout)");

    // prob-surface
    ModelFlags surf_model;
    GridFlags surf_grid;
    double hmax_lo = 0.01, hmax_hi = 1.0, y_hi = 1.5;
    std::size_t hmax_points = 100, y_points = 150;
    auto* surf = app.add_subcommand("prob-surface", "one-step probability that an explicit step goes negative");
    add_model_flags(surf, surf_model, true, false);
    add_strategy_flags(surf, surf_grid, "one-sided");
    surf->add_option("--hmax-min", hmax_lo)->capture_default_str();
    surf->add_option("--hmax-max", hmax_hi)->capture_default_str();
    surf->add_option("--hmax-points", hmax_points)->capture_default_str();
    surf->add_option("--y-max", y_hi)->capture_default_str();
    surf->add_option("--y-points", y_points)->capture_default_str();
    surf->add_option("--out", out_path, "output CSV (default stdout)");

    // simulate
    ModelFlags sim_model;
    GridFlags sim_grid;
    std::string sim_hmax = "2^-7";
    std::string sim_scheme = "EA";
    std::uint64_t sim_m = 1;
    std::uint64_t sim_path = 0;
    std::string dump_path;
    auto* sim = app.add_subcommand("simulate", "run the hybrid adaptive method over M paths");
    add_model_flags(sim, sim_model, true);
    add_strategy_flags(sim, sim_grid, "one-sided");
    add_sim_flags(sim, sim_grid);
    sim->add_option("--hmax", sim_hmax, "maximum step (tick-aligned)")->capture_default_str();
    sim->add_option("--scheme", sim_scheme, "EA | SIA")->check(CLI::IsMember({"EA", "SIA"}))->capture_default_str();
    sim->add_option("--M", sim_m, "Monte Carlo paths")->capture_default_str();
    sim->add_option("--path", sim_path, "path index written by --dump-paths")->capture_default_str();
    sim->add_option("--dump-paths", dump_path, "write trajectory CSV (t,h,Y,X,provenance) of --path");
    sim->add_option("--out", out_path, "per-path summary CSV (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << CIRSIM_VERSION << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    // Each branch validates everything before doing any work.
    std::function<void()> work;
    try {
        if (conv->parsed()) {
            ConvergenceConfig cfg;
            cfg.model = resolve_model(conv_model);
            cfg.kind = parse_kind(conv_grid.strategy);
            cfg.r = conv_grid.r;
            cfg.rho = parse_rho(conv_grid.rho);
            cfg.h_max_grid = parse_grid(conv_hgrid);
            cfg.paths = conv_m;
            cfg.seed = conv_grid.seed;
            cfg.resolution_exp = conv_grid.resolution_exp;
            cfg.horizon = conv_grid.horizon;
            cfg.threads = conv_grid.threads;
            cfg.timing = conv_timing;
            validate(cfg);
            const std::string header = provenance_line(
                "convergence", conv_grid,
                {{"model", fmt_model(cfg.model)}, {"strategy", conv_grid.strategy}, {"r", std::to_string(cfg.r)},
                 {"rho", std::to_string(cfg.rho)}, {"T", fmt::format("{}", cfg.horizon)},
                 {"M", std::to_string(cfg.paths)}, {"hmax-grid", conv_hgrid},
                 {"timing", conv_timing ? "1" : "0"}});
            work = [&, cfg, header] {
                const auto rows = run_convergence(cfg);
                emit(out_path, out, [&](std::ostream& os) {
                    os << header;
                    write_convergence_csv(os, rows);
                });
            };
        } else if (sweep->parsed()) {
            SweepConfig cfg;
            apply_config(sweep_model);
            cfg.kappa = sweep_model.kappa;
            cfg.lambda = sweep_model.lambda;
            cfg.x0 = sweep_model.x0;
            if (a_points < 1) throw ParameterError("--a-points must be >= 1");
            if (!(a_min > 0.0) || !(a_max >= a_min)) throw ParameterError("need 0 < a-min <= a-max");
            cfg.a_grid = linspace(a_min, a_max, a_points);
            cfg.base.kind = parse_kind(sweep_grid.strategy);
            cfg.base.r = sweep_grid.r;
            cfg.base.rho = parse_rho(sweep_grid.rho);
            cfg.base.h_max_grid = parse_grid(sweep_hgrid);
            cfg.base.paths = sweep_m;
            cfg.base.seed = sweep_grid.seed;
            cfg.base.resolution_exp = sweep_grid.resolution_exp;
            cfg.base.horizon = sweep_grid.horizon;
            cfg.base.threads = sweep_grid.threads;
            validate(cfg);
            const std::string header = provenance_line(
                "sweep", sweep_grid,
                {{"kappa", fmt::format("{}", cfg.kappa)}, {"lambda", fmt::format("{}", cfg.lambda)},
                 {"x0", fmt::format("{}", cfg.x0)}, {"strategy", sweep_grid.strategy},
                 {"r", std::to_string(cfg.base.r)}, {"rho", std::to_string(cfg.base.rho)},
                 {"T", fmt::format("{}", cfg.base.horizon)}, {"M", std::to_string(cfg.base.paths)},
                 {"hmax-grid", sweep_hgrid}, {"a-min", fmt::format("{}", a_min)},
                 {"a-max", fmt::format("{}", a_max)}, {"a-points", std::to_string(a_points)}});
            work = [&, cfg, header] {
                const auto rows = run_sweep(cfg);
                emit(out_path, out, [&](std::ostream& os) {
                    os << header;
                    write_sweep_csv(os, rows);
                });
            };
        } else if (pos->parsed()) {
            const CirModel model = resolve_model(pos_model);
            const std::uint64_t rho = parse_rho(pos_grid.rho);
            if (pos_grid.r < 1) throw ParameterError("--r must be >= 1");
            const StrategyBounds bounds{parse_kind(pos_grid.strategy), pos_grid.r, 1.0, static_cast<double>(rho)};
            const BoundConvention conv_kind =
                convention == "nmax" ? BoundConvention::NmaxCeil : BoundConvention::AsPrinted;
            std::vector<PositivityQuery> queries;
            for (double eps : parse_grid(eps_list)) {
                queries.push_back(PositivityQuery::make(model, bounds, eps, pos_grid.horizon));
            }
            const std::string header =
                fmt::format("# version={} command=positivity-bound {} r={} rho={} T={} strategy={} gh-convention={}\n",
                            CIRSIM_VERSION, fmt_model(model), bounds.r, rho, pos_grid.horizon, pos_grid.strategy,
                            convention);
            work = [&, queries, header, conv_kind] {
                std::vector<PositivityRow> rows;
                for (const auto& q : queries) {
                    const HmaxBound b = hmax_bound(q, conv_kind);
                    rows.push_back({q.strategy.rho, q.strategy.q(), q.strategy.r_bound(), q.model.kappa,
                                    q.model.lambda, q.model.sigma, q.epsilon, b.value});
                }
                emit(out_path, out, [&](std::ostream& os) {
                    os << header;
                    write_positivity_csv(os, rows);
                });
            };
        } else if (surf->parsed()) {
            const CirModel model = resolve_model(surf_model);
            const std::uint64_t rho = parse_rho(surf_grid.rho);
            if (parse_kind(surf_grid.strategy) != StrategyKind::OneSided) {
                throw ParameterError("prob-surface is defined for the one-sided strategy only");
            }
            if (surf_grid.r < 1) throw ParameterError("--r must be >= 1");
            if (!(hmax_lo > 0.0) || !(hmax_hi >= hmax_lo) || hmax_points < 1 || y_points < 1) {
                throw ParameterError("need 0 < hmax-min <= hmax-max and at least one point per axis");
            }
            const int r = surf_grid.r;
            const std::string header =
                fmt::format("# version={} command=prob-surface {} r={} rho={} hmax=[{},{}]x{} y-max={} y-points={}\n",
                            CIRSIM_VERSION, fmt_model(model), r, rho, hmax_lo, hmax_hi, hmax_points, y_hi, y_points);
            work = [&, model, rho, r, header] {
                std::vector<SurfacePoint> pts;
                for (double hmax : linspace(hmax_lo, hmax_hi, hmax_points)) {
                    const StrategyBounds b{StrategyKind::OneSided, r, hmax, static_cast<double>(rho)};
                    const double lo = b.h_min();
                    if (!(y_hi > lo)) continue;
                    // Open at y = h_min, closed at y_max.
                    for (std::size_t i = 1; i <= y_points; ++i) {
                        const double y = lo + (y_hi - lo) * static_cast<double>(i) / static_cast<double>(y_points);
                        pts.push_back({y, hmax, one_step_neg_prob(model, b, y)});
                    }
                }
                emit(out_path, out, [&](std::ostream& os) {
                    os << header;
                    write_surface_csv(os, pts);
                });
            };
        } else if (sim->parsed()) {
            const CirModel model = resolve_model(sim_model);
            const StepStrategy strategy =
                StepStrategy::make(parse_kind(sim_grid.strategy), sim_grid.r, parse_number(sim_hmax),
                                   parse_rho(sim_grid.rho), sim_grid.resolution_exp, sim_grid.horizon);
            if (sim_m < 1) throw ParameterError("--M must be >= 1");
            if (!dump_path.empty() && sim_path >= sim_m) throw ParameterError("--path must be < --M");
            const AdaptiveScheme scheme = sim_scheme == "SIA" ? AdaptiveScheme::SIA : AdaptiveScheme::EA;
            const std::string header = provenance_line(
                "simulate", sim_grid,
                {{"model", fmt_model(model)}, {"strategy", sim_grid.strategy}, {"r", std::to_string(sim_grid.r)},
                 {"rho", std::to_string(strategy.rho())}, {"T", fmt::format("{}", sim_grid.horizon)},
                 {"hmax", fmt::format("{}", strategy.h_max())}, {"scheme", sim_scheme},
                 {"M", std::to_string(sim_m)}});
            work = [&, model, strategy, scheme, header] {
                const auto outcomes =
                    simulate_paths(model, strategy, scheme, sim_m, sim_grid.seed, sim_grid.horizon, sim_grid.threads);
                emit(out_path, out, [&](std::ostream& os) {
                    os << header;
                    os << "path,N,n_explicit,n_floor,n_retake,X_T\n";
                    for (const auto& o : outcomes) {
                        fmt::print(os, "{},{},{},{},{},{}\n", o.path_index, o.summary.n_steps, o.summary.n_explicit,
                                   o.summary.n_floor, o.summary.n_retake, o.summary.x_final());
                    }
                });
                if (!dump_path.empty()) {
                    const PathDriver driver(sim_grid.seed, sim_path, sim_grid.resolution_exp, sim_grid.horizon);
                    const Trajectory tr = with_brownian_source(
                        driver, [&](const auto& src) { return simulate(model, strategy, src, scheme); });
                    emit(dump_path, out, [&](std::ostream& os) {
                        os << header;
                        write_trajectory_csv(os, tr);
                    });
                }
            };
        }
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        work();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace cirsim::cli
