#pragma once

#include <array>
#include <concepts>
#include <cstdint>
#include <vector>

namespace cirsim {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

// Inverse of the standard normal CDF (Wichura, AS241). p must lie in (0, 1).
double inverse_normal_cdf(double p);

// Per-tick Brownian increments are stored as integer multiples of this
// quantum, so sums over any tick range are exact in double precision and
// therefore independent of how the range is split.
inline constexpr double kIncrementQuantum = 0x1p-40;

inline constexpr int kMaxResolutionExp = 30;

/**
 * Deterministic Brownian path on the dyadic grid t_i = i * T / 2^K.
 *
 * The standard normal attached to tick i is a pure function of
 * (seed, path_index, i); no generator state is carried between calls, so
 * any number of threads may query any ticks in any order.
 */
class PathDriver {
public:
    PathDriver(std::uint64_t seed, std::uint64_t path_index, int resolution_exp, double horizon = 1.0);

    [[nodiscard]] double gaussian_at(std::uint64_t tick) const;

    // W(t_i+1) - W(t_i) in units of kIncrementQuantum.
    [[nodiscard]] std::int64_t quantized_step(std::uint64_t tick) const;

    // W(t_b) - W(t_a), accumulated tick by tick (O(b - a)).
    [[nodiscard]] double increment(std::uint64_t tick_a, std::uint64_t tick_b) const;

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t path_index() const noexcept { return path_index_; }
    [[nodiscard]] int resolution_exp() const noexcept { return resolution_exp_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::uint64_t tick_count() const noexcept { return std::uint64_t{1} << resolution_exp_; }
    [[nodiscard]] double tick_length() const noexcept { return tick_length_; }
    [[nodiscard]] double time_at(std::uint64_t tick) const noexcept;

private:
    void check_tick(std::uint64_t tick) const;

    std::uint64_t seed_;
    std::uint64_t path_index_;
    int resolution_exp_;
    double horizon_;
    double tick_length_;
    double sqrt_tick_;
};

/**
 * A PathDriver materialised as prefix sums, giving O(1) increments.
 * Values are bit-identical to PathDriver::increment.
 */
class SampledPath {
public:
    // Refuses resolutions above kMaxSampledExp (memory).
    static constexpr int kMaxSampledExp = 26;

    explicit SampledPath(const PathDriver& driver);

    [[nodiscard]] double increment(std::uint64_t tick_a, std::uint64_t tick_b) const;
    [[nodiscard]] double brownian_at(std::uint64_t tick) const;

    [[nodiscard]] std::uint64_t tick_count() const noexcept { return driver_.tick_count(); }
    [[nodiscard]] double tick_length() const noexcept { return driver_.tick_length(); }
    [[nodiscard]] double time_at(std::uint64_t tick) const noexcept { return driver_.time_at(tick); }
    [[nodiscard]] const PathDriver& driver() const noexcept { return driver_; }

private:
    PathDriver driver_;
    std::vector<std::int64_t> prefix_;
};

// Anything that hands out Brownian increments on the tick grid.
template <typename S>
concept BrownianSource = requires(const S& s, std::uint64_t a) {
    { s.increment(a, a) } -> std::convertible_to<double>;
    { s.tick_count() } -> std::convertible_to<std::uint64_t>;
    { s.tick_length() } -> std::convertible_to<double>;
    { s.time_at(a) } -> std::convertible_to<double>;
};

}  // namespace cirsim
