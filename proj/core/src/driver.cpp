#include "cirsim/driver.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cirsim/error.hpp"

namespace cirsim {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

template <std::size_t N>
double poly(const double (&c)[N], double x) noexcept {
    double acc = c[N - 1];
    for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + c[i];
    return acc;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError(fmt::format("inverse_normal_cdf: p = {} outside (0, 1)", p));

    static constexpr double a[] = {3.3871328727963666080e0, 1.3314166789178437745e+2, 1.9715909503065514427e+3,
                                   1.3731693765509461125e+4, 4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                   3.3430575583588128105e+4, 2.5090809287301226727e+3};
    static constexpr double b[] = {1.0,
                                   4.2313330701600911252e+1, 6.8718700749205790830e+2, 5.3941960214247511077e+3,
                                   2.1213794301586595867e+4, 3.9307895800092710610e+4, 2.8729085735721942674e+4,
                                   5.2264952788528545610e+3};
    static constexpr double c[] = {1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
                                   3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
                                   2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr double d[] = {1.0,
                                   2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
                                   1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                   1.05075007164441684324e-9};
    static constexpr double e[] = {6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
                                   2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                   2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr double f[] = {1.0,
                                   5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
                                   7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                   2.04426310338993978564e-15};

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * poly(a, r) / poly(b, r);
    }
    double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = poly(c, r) / poly(d, r);
    } else {
        r -= 5.0;
        val = poly(e, r) / poly(f, r);
    }
    return q < 0.0 ? -val : val;
}

PathDriver::PathDriver(std::uint64_t seed, std::uint64_t path_index, int resolution_exp, double horizon)
    : seed_(seed), path_index_(path_index), resolution_exp_(resolution_exp), horizon_(horizon) {
    if (resolution_exp < 1 || resolution_exp > kMaxResolutionExp) {
        throw ParameterError(
            fmt::format("resolution exponent must be in [1, {}] (got {})", kMaxResolutionExp, resolution_exp));
    }
    if (!std::isfinite(horizon) || !(horizon > 0.0)) {
        throw ParameterError(fmt::format("horizon must be finite and > 0 (got {})", horizon));
    }
    tick_length_ = std::ldexp(horizon, -resolution_exp);
    sqrt_tick_ = std::sqrt(tick_length_);
}

double PathDriver::time_at(std::uint64_t tick) const noexcept {
    return std::ldexp(static_cast<double>(tick) * horizon_, -resolution_exp_);
}

void PathDriver::check_tick(std::uint64_t tick) const {
    if (tick >= tick_count()) {
        throw ParameterError(fmt::format("tick {} outside [0, {})", tick, tick_count()));
    }
}

double PathDriver::gaussian_at(std::uint64_t tick) const {
    check_tick(tick);
    const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(tick), static_cast<std::uint32_t>(tick >> 32),
                                           static_cast<std::uint32_t>(path_index_),
                                           static_cast<std::uint32_t>(path_index_ >> 32)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = philox4x32(ctr, key);
    const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    // 53-bit uniform strictly inside (0, 1).
    const double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
    return inverse_normal_cdf(u);
}

std::int64_t PathDriver::quantized_step(std::uint64_t tick) const {
    return std::llround(sqrt_tick_ * gaussian_at(tick) / kIncrementQuantum);
}

double PathDriver::increment(std::uint64_t tick_a, std::uint64_t tick_b) const {
    if (tick_a > tick_b || tick_b > tick_count()) {
        throw ParameterError(fmt::format("invalid tick range [{}, {}) for {} ticks", tick_a, tick_b, tick_count()));
    }
    std::int64_t sum = 0;
    for (std::uint64_t i = tick_a; i < tick_b; ++i) sum += quantized_step(i);
    return static_cast<double>(sum) * kIncrementQuantum;
}

SampledPath::SampledPath(const PathDriver& driver) : driver_(driver) {
    if (driver.resolution_exp() > kMaxSampledExp) {
        throw ParameterError(fmt::format("cannot materialise a path with resolution exponent {} (max {})",
                                         driver.resolution_exp(), kMaxSampledExp));
    }
    const std::uint64_t n = driver.tick_count();
    prefix_.resize(n + 1);
    prefix_[0] = 0;
    for (std::uint64_t i = 0; i < n; ++i) prefix_[i + 1] = prefix_[i] + driver.quantized_step(i);
}

double SampledPath::increment(std::uint64_t tick_a, std::uint64_t tick_b) const {
    if (tick_a > tick_b || tick_b > tick_count()) {
        throw ParameterError(fmt::format("invalid tick range [{}, {}) for {} ticks", tick_a, tick_b, tick_count()));
    }
    return static_cast<double>(prefix_[tick_b] - prefix_[tick_a]) * kIncrementQuantum;
}

double SampledPath::brownian_at(std::uint64_t tick) const { return increment(0, tick); }

}  // namespace cirsim
