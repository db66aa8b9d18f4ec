#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "cirsim/adaptive.hpp"
#include "cirsim/error.hpp"
#include "test_support.hpp"

namespace cirsim {
namespace {

using testing::kappa1_model;
using testing::kappa2_model;

// Hands out the same increment for every range.
struct ConstantIncrements {
    double dw;
    int resolution_exp = 18;
    [[nodiscard]] double increment(std::uint64_t, std::uint64_t) const { return dw; }
    [[nodiscard]] std::uint64_t tick_count() const { return std::uint64_t{1} << resolution_exp; }
    [[nodiscard]] double tick_length() const { return std::ldexp(1.0, -resolution_exp); }
    [[nodiscard]] double time_at(std::uint64_t t) const { return static_cast<double>(t) * tick_length(); }
};
static_assert(BrownianSource<ConstantIncrements>);

TEST(StepStrategy, StepSizeExamples) {
    const auto one = StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-4, 64, 18);
    EXPECT_EQ(one.step_size(0.5), 0.03125);
    EXPECT_EQ(one.step_size(2.0), 0.0625);
    EXPECT_EQ(one.step_size(1e-4), 0x1p-10);
    EXPECT_EQ(one.h_min(), 0x1p-10);
    const auto two = StepStrategy::make(StrategyKind::TwoSided, 1, 0x1p-4, 64, 18);
    EXPECT_EQ(two.step_size(2.0), 0.03125);
    EXPECT_EQ(two.step_size(1e6), 0x1p-10);
    EXPECT_EQ(two.step_size(1.0), 0.0625);
}

TEST(StepStrategy, BoundsAndDerivedValues) {
    const auto s = StepStrategy::make(StrategyKind::TwoSided, 2, 0x1p-4, 256, 18);
    const StrategyBounds b = s.bounds();
    EXPECT_DOUBLE_EQ(b.q(), 1.0 / 16.0);
    EXPECT_DOUBLE_EQ(b.r_bound(), 16.0);
    EXPECT_EQ(s.h_max(), 256.0 * s.h_min());
    EXPECT_TRUE(std::isinf(StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-4, 64, 18).bounds().r_bound()));
}

TEST(StepStrategy, Validation) {
    EXPECT_THROW(StepStrategy::make(StrategyKind::OneSided, 1, 0.1, 64, 18), ParameterError);  // not a tick multiple
    EXPECT_THROW(StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-9, 64, 14), ParameterError);  // h_min below a tick
    EXPECT_THROW(StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-4, 48, 18), ParameterError);  // rho not 2^k
    EXPECT_THROW(StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-4, 1, 18), ParameterError);
    EXPECT_THROW(StepStrategy::make(StrategyKind::OneSided, 0, 0x1p-4, 64, 18), ParameterError);
    EXPECT_THROW(StepStrategy::make(StrategyKind::OneSided, 1, 2.0, 64, 18), ParameterError);
    EXPECT_NO_THROW(StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-9, 64, 15));
}

TEST(StepStrategy, AlignedDown) {
    const auto s = StepStrategy::aligned_down(StrategyKind::TwoSided, 1, 5.454e-3, 64, 18);
    EXPECT_EQ(s.h_max_ticks(), 1408u);
    EXPECT_EQ(s.h_min_ticks(), 22u);
    EXPECT_LE(s.h_max(), 5.454e-3);
    EXPECT_THROW(StepStrategy::aligned_down(StrategyKind::TwoSided, 1, 1e-6, 64, 10), ParameterError);
}

TEST(HybridAdvance, ExplicitBranchWhenPositive) {
    const CirModel m = kappa2_model();
    const auto s = StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-4, 64, 18);
    const auto rec = hybrid_advance(m, s, ConstantIncrements{0.0}, AdaptiveScheme::EA, {0, 0.5});
    EXPECT_EQ(rec.provenance, Provenance::Explicit);
    EXPECT_EQ(rec.h, 0.03125);
    EXPECT_DOUBLE_EQ(rec.y_to, explicit_map(m, 0.5, 0.0, 0.03125));
}

TEST(HybridAdvance, RetakeUsesSameStepAndIncrement) {
    const CirModel m = kappa2_model();
    // h_max * 0.02 = 2^-10 exactly on the K = 18 grid.
    const auto s = StepStrategy::make(StrategyKind::OneSided, 1, 12800.0 * 0x1p-18, 64, 18);
    ASSERT_EQ(s.step_ticks(0.02), 256u);
    const auto rec = hybrid_advance(m, s, ConstantIncrements{-0.3}, AdaptiveScheme::EA, {0, 0.02});
    EXPECT_EQ(rec.provenance, Provenance::BackstopRetake);
    EXPECT_EQ(rec.h, 0x1p-10);
    EXPECT_EQ(rec.dw, -0.3);
    EXPECT_EQ(rec.y_to, backstop_map(m, 0.02, -0.3, 0x1p-10));
    EXPECT_GT(rec.y_to, 0.0);

    const auto sia = hybrid_advance(m, s, ConstantIncrements{-0.5}, AdaptiveScheme::SIA, {0, 0.02});
    EXPECT_EQ(sia.provenance, Provenance::BackstopRetake);
    EXPECT_EQ(sia.y_to, backstop_map(m, 0.02, -0.5, 0x1p-10));
}

TEST(HybridAdvance, FloorAlwaysUsesBackstop) {
    const CirModel m = kappa2_model();
    const auto s = StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-4, 64, 18);
    for (double dw : {-0.1, 0.0, 0.1}) {
        const auto rec = hybrid_advance(m, s, ConstantIncrements{dw}, AdaptiveScheme::EA, {0, 1e-4});
        EXPECT_EQ(rec.provenance, Provenance::BackstopFloor);
        EXPECT_EQ(rec.ticks, s.h_min_ticks());
        EXPECT_EQ(rec.y_to, backstop_map(m, 1e-4, dw, s.h_min()));
    }
}

TEST(HybridAdvance, TruncatedFinalStepBelowFloorUsesBackstop) {
    const CirModel m = kappa2_model();
    const auto s = StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-4, 64, 18);
    const ConstantIncrements src{0.0};
    const auto rec = hybrid_advance(m, s, src, AdaptiveScheme::EA, {src.tick_count() - 3, 0.5});
    EXPECT_EQ(rec.ticks, 3u);
    EXPECT_EQ(rec.provenance, Provenance::BackstopFloor);
    const auto above = hybrid_advance(m, s, src, AdaptiveScheme::EA, {src.tick_count() - 1000, 0.5});
    EXPECT_EQ(above.ticks, 1000u);
    EXPECT_EQ(above.provenance, Provenance::Explicit);
}

struct TrajectoryCase {
    StrategyKind kind;
    int r;
    double h_max;
    std::uint64_t rho;
    AdaptiveScheme scheme;
    bool kappa2;
};

class TrajectoryProperties : public ::testing::TestWithParam<TrajectoryCase> {};

TEST_P(TrajectoryProperties, InvariantsHoldOnEveryPath) {
    const auto& c = GetParam();
    const CirModel m = c.kappa2 ? kappa2_model() : kappa1_model();
    constexpr int kRes = 14;
    const auto s = StepStrategy::make(c.kind, c.r, c.h_max, c.rho, kRes);
    const StrategyBounds b = s.bounds();
    const double n_min = std::floor(1.0 / s.h_max());
    const double n_max = std::ceil(1.0 / s.h_min());
    for (std::uint64_t p = 0; p < 100; ++p) {
        const SampledPath path(PathDriver(1234, p, kRes));
        const Trajectory tr = simulate(m, s, path, c.scheme);
        const auto& sum = tr.summary;
        ASSERT_EQ(sum.n_steps, tr.steps.size());
        ASSERT_EQ(sum.n_explicit + sum.n_floor + sum.n_retake, sum.n_steps);
        ASSERT_EQ(tr.times.back(), 1.0);
        // Steps are tick multiples, so their sum is exact.
        ASSERT_EQ(std::accumulate(tr.steps.begin(), tr.steps.end(), 0.0), 1.0);
        ASSERT_GE(static_cast<double>(sum.n_steps), n_min);
        ASSERT_LE(static_cast<double>(sum.n_steps), n_max);
        ASSERT_EQ(std::accumulate(tr.increments.begin(), tr.increments.end(), 0.0),
                  path.increment(0, path.tick_count()));
        for (std::size_t i = 0; i < tr.steps.size(); ++i) {
            ASSERT_GT(tr.states[i + 1], 0.0);
            ASSERT_LE(tr.steps[i], s.h_max());
            if (tr.provenance[i] != Provenance::BackstopFloor) {
                ASSERT_GE(tr.steps[i], s.h_min());
                ASSERT_GE(tr.states[i], b.q()) << "path " << p << " step " << i;
                if (c.kind == StrategyKind::TwoSided) ASSERT_LT(tr.states[i], b.r_bound());
            }
        }
        const auto again = simulate_summary(m, s, PathDriver(1234, p, kRes), c.scheme);
        ASSERT_EQ(again.y_final, sum.y_final);
        ASSERT_EQ(again.n_steps, sum.n_steps);
    }
}

INSTANTIATE_TEST_SUITE_P(
    Strategies, TrajectoryProperties,
    ::testing::Values(TrajectoryCase{StrategyKind::OneSided, 1, 0x1p-4, 64, AdaptiveScheme::EA, true},
                      TrajectoryCase{StrategyKind::OneSided, 1, 0x1p-7, 64, AdaptiveScheme::SIA, true},
                      TrajectoryCase{StrategyKind::TwoSided, 1, 0x1p-5, 64, AdaptiveScheme::EA, false},
                      TrajectoryCase{StrategyKind::OneSided, 2, 0x1p-4, 64, AdaptiveScheme::EA, false},
                      TrajectoryCase{StrategyKind::TwoSided, 2, 0x1p-3, 16, AdaptiveScheme::SIA, true}));

TEST(Simulate, NoRetakesWhenDriftDominatesNoise) {
    const CirModel m = kappa2_model();
    const auto s = StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-4, 64, 14);
    std::uint64_t retakes = 0;
    for (std::uint64_t p = 0; p < 1000; ++p) {
        retakes += simulate_summary(m, s, PathDriver(42, p, 14), AdaptiveScheme::EA).n_retake;
    }
    EXPECT_EQ(retakes, 0u);
}

TEST(Simulate, RejectsMismatchedGrid) {
    const CirModel m = kappa2_model();
    const auto s = StepStrategy::make(StrategyKind::OneSided, 1, 0x1p-4, 64, 14);
    EXPECT_THROW((void)simulate_summary(m, s, PathDriver(1, 0, 16), AdaptiveScheme::EA), ParameterError);
}

TEST(Trajectory, XStates) {
    Trajectory tr;
    tr.states = {0.5, 2.0};
    EXPECT_EQ(tr.x_states(), (std::vector<double>{0.25, 4.0}));
}

}  // namespace
}  // namespace cirsim
