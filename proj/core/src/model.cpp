#include "cirsim/model.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "cirsim/error.hpp"

namespace cirsim {

namespace {

void require_positive(const char* name, double v) {
    if (!std::isfinite(v) || !(v > 0.0)) {
        throw ParameterError(fmt::format("{} must be finite and > 0 (got {})", name, v));
    }
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ParameterError(fmt::format("config key '{}': '{}' is not a number", key, text));
    }
    if (used != text.size()) {
        throw ParameterError(fmt::format("config key '{}': trailing characters in '{}'", key, text));
    }
    return v;
}

}  // namespace

CirModel make_model(double kappa, double lambda, double sigma, double x0) {
    require_positive("kappa", kappa);
    require_positive("lambda", lambda);
    require_positive("sigma", sigma);
    require_positive("x0", x0);

    CirModel m{};
    m.kappa = kappa;
    m.lambda = lambda;
    m.sigma = sigma;
    m.x0 = x0;
    m.alpha = (4.0 * kappa * lambda - sigma * sigma) / 8.0;
    m.beta = -kappa / 2.0;
    m.gamma = sigma / 2.0;
    m.y0 = std::sqrt(x0);
    m.a = sigma * sigma / (2.0 * kappa * lambda);
    return m;
}

CirModel make_model_from_a(double kappa, double lambda, double a, double x0) {
    require_positive("a", a);
    require_positive("kappa", kappa);
    require_positive("lambda", lambda);
    return make_model(kappa, lambda, std::sqrt(2.0 * kappa * lambda * a), x0);
}

double drift(const CirModel& model, double y) {
    if (y == 0.0) throw DomainError("transformed drift is singular at y = 0");
    return model.alpha / y + model.beta * y;
}

double exact_mean(const CirModel& model, double t) {
    if (!(t >= 0.0)) throw ParameterError(fmt::format("time must be >= 0 (got {})", t));
    return model.x0 * std::exp(-model.kappa * t) - model.lambda * std::expm1(-model.kappa * t);
}

double exact_variance(const CirModel& model, double t) {
    if (!(t >= 0.0)) throw ParameterError(fmt::format("time must be >= 0 (got {})", t));
    const double e = std::exp(-model.kappa * t);
    const double s2 = model.sigma * model.sigma;
    const double one_minus = -std::expm1(-model.kappa * t);
    return model.x0 * s2 / model.kappa * e * one_minus +
           model.lambda * s2 / (2.0 * model.kappa) * one_minus * one_minus;
}

std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError(fmt::format("cannot open config file '{}'", path.string()));

    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ParameterError(fmt::format("{}:{}: expected key=value", path.string(), lineno));
        }
        std::string key = trim(body.substr(0, eq));
        if (key.empty()) throw ParameterError(fmt::format("{}:{}: empty key", path.string(), lineno));
        out[std::move(key)] = trim(body.substr(eq + 1));
    }
    return out;
}

CirModel read_model_config(const std::filesystem::path& path) {
    static const std::set<std::string> known{"kappa", "lambda", "sigma", "x0"};
    const auto kv = read_key_value_file(path);
    for (const auto& [key, value] : kv) {
        if (!known.contains(key)) throw ParameterError(fmt::format("unknown config key '{}'", key));
    }
    auto get = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ParameterError(fmt::format("config is missing '{}'", key));
        return parse_double(key, it->second);
    };
    return make_model(get("kappa"), get("lambda"), get("sigma"), get("x0"));
}

}  // namespace cirsim
