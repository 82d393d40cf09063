#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "stream_gen.hpp"
#include "tactile/signal.hpp"

namespace tactile {
namespace {

StreamFrame frame_with(double t, WrenchSample w) {
    StreamFrame f;
    f.t = t;
    f.wrench = w;
    return f;
}

TouchSequence random_sequence(std::mt19937_64& rng, std::size_t len) {
    std::normal_distribution<double> unit(0.0, 1.0);
    TouchSequence s;
    s.frames.resize(len);
    for (auto& w : s.frames)
        for (std::size_t c = 0; c < kWrenchChannels; ++c) w[c] = unit(rng);
    return s;
}

TEST(Compensate, ConstantOffsetConvergesToZero) {
    BaselineState state(50);
    TouchThresholds th;
    StreamFrame out;
    for (int i = 0; i < 120; ++i) {
        out = compensate(frame_with(i * 0.01, {0, 0, 0.3, 0, 0, 0}), state, th);
        if (i >= 50) EXPECT_NEAR(out.wrench.fz, 0.0, 1e-9) << "frame " << i;
    }
}

TEST(Compensate, AllZeroStreamStaysZero) {
    BaselineState state(10);
    for (int i = 0; i < 40; ++i) {
        const auto out = compensate(frame_with(i, {}), state, {});
        for (std::size_t c = 0; c < kWrenchChannels; ++c) EXPECT_EQ(out.wrench[c], 0.0);
    }
}

TEST(Compensate, StepOffsetFollowsRollingMean) {
    const std::size_t window = 20;
    const std::size_t step_at = 30;
    std::vector<double> raw(100);
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = i >= step_at ? 0.2 : 0.0;

    // Rolling mean over the previous `window` raw samples (all non-touch).
    std::vector<double> expected(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const std::size_t from = k > window ? k - window : 0;
        double sum = 0;
        for (std::size_t j = from; j < k; ++j) sum += raw[j];
        const double mean = k == from ? 0.0 : sum / static_cast<double>(k - from);
        expected[k] = raw[k] - mean;
    }

    BaselineState state(window);
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const auto out = compensate(frame_with(k * 0.01, {0, raw[k], 0, 0, 0, 0}), state, {});
        EXPECT_NEAR(out.wrench.fy, expected[k], 1e-12) << "frame " << k;
        if (k >= step_at + window) EXPECT_NEAR(out.wrench.fy, 0.0, 1e-12);
    }
}

TEST(Compensate, BaselineFrozenDuringTouch) {
    BaselineState state(10);
    TouchThresholds th;
    for (int i = 0; i < 10; ++i) compensate(frame_with(i, {0.1, 0, 0.05, 0, 0, 0}), state, th);
    const WrenchSample before = state.baseline();
    for (int i = 0; i < 30; ++i) {
        const auto out = compensate(frame_with(10 + i, {0.4, 0, 1.5, 0, 0, 0}), state, th);
        EXPECT_TRUE(is_touch(out, th));
    }
    EXPECT_EQ(state.baseline(), before);
    EXPECT_EQ(state.buffered(), 10u);
}

TEST(Compensate, TorqueBaselineIsSubtracted) {
    BaselineState state(5);
    StreamFrame f;
    f.torque = TorqueSample{};
    (*f.torque)[1] = 0.1;
    for (int i = 0; i < 5; ++i) compensate(f, state, {});
    const auto out = compensate(f, state, {});
    EXPECT_NEAR((*out.torque)[1], 0.0, 1e-15);
}

TEST(Compensate, RejectsNonFiniteFrames) {
    BaselineState state(5);
    auto f = frame_with(0, {0, 0, std::numeric_limits<double>::quiet_NaN(), 0, 0, 0});
    EXPECT_THROW(compensate(f, state, {}), DataQualityError);
    f = frame_with(0, {std::numeric_limits<double>::infinity(), 0, 0, 0, 0, 0});
    EXPECT_THROW(compensate(f, state, {}), DataQualityError);
    EXPECT_EQ(state.buffered(), 0u);
}

TEST(Baseline, ZeroWindowIsRejected) { EXPECT_THROW(BaselineState(0), Error); }

TEST(IsTouch, Examples) {
    TouchThresholds th{0.5, 0.2};
    EXPECT_FALSE(is_touch(frame_with(0, {}), th));
    EXPECT_TRUE(is_touch(frame_with(0, {0, 0, 1.5, 0, 0, 0}), th));
    EXPECT_TRUE(is_touch(frame_with(0, {0, 0, -1.5, 0, 0, 0}), th));
    EXPECT_FALSE(is_touch(frame_with(0, {0, 0, 0.5, 0, 0, 0}), th));

    StreamFrame f = frame_with(0, {});
    f.torque = TorqueSample{};
    (*f.torque)[1] = 0.4;
    EXPECT_TRUE(is_touch(f, th));
    (*f.torque)[1] = 0.1;
    (*f.torque)[0] = 5.0;  // only joint 2 counts
    EXPECT_FALSE(is_touch(f, th));
}

TEST(Segment, SingleTouchBoundaries) {
    std::mt19937_64 rng(7);
    testing::GeneratedStream g;
    testing::append_silence(g, 200, rng);
    testing::append_touch(g, 180, rng);
    testing::append_silence(g, 200, rng);

    const auto spans = find_touches(g.frames, {}, {});
    ASSERT_EQ(spans.size(), 1u);
    EXPECT_LE(std::abs(static_cast<long>(spans[0].begin) - static_cast<long>(g.truth[0].begin)), 2);
    EXPECT_LE(std::abs(static_cast<long>(spans[0].end) - static_cast<long>(g.truth[0].end)), 2);

    const auto seqs = segment(g.frames, {}, {});
    ASSERT_EQ(seqs.size(), 1u);
    EXPECT_EQ(seqs[0].size(), spans[0].size());
    EXPECT_FALSE(seqs[0].has_torque());
}

TEST(Segment, SilenceAndEmptyInputs) {
    std::mt19937_64 rng(1);
    testing::GeneratedStream g;
    testing::append_silence(g, 1000, rng);
    EXPECT_TRUE(segment(g.frames, {}, {}).empty());
    EXPECT_TRUE(segment(std::vector<StreamFrame>{}, {}, {}).empty());
}

TEST(Segment, TwoSeparatedTouches) {
    std::mt19937_64 rng(3);
    testing::GeneratedStream g;
    testing::append_silence(g, 50, rng);
    testing::append_touch(g, 120, rng);
    testing::append_silence(g, 12, rng);  // > debounce
    testing::append_touch(g, 90, rng);
    testing::append_silence(g, 50, rng);
    const auto spans = find_touches(g.frames, {}, {});
    ASSERT_EQ(spans.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_LE(std::abs(static_cast<long>(spans[k].begin) - static_cast<long>(g.truth[k].begin)), 2);
        EXPECT_LE(std::abs(static_cast<long>(spans[k].end) - static_cast<long>(g.truth[k].end)), 2);
    }
}

TEST(Segment, ShortGapIsBridgedByDebounce) {
    std::vector<StreamFrame> s(100);
    for (std::size_t i = 10; i < 60; ++i) s[i].wrench.fz = 1.0;
    for (std::size_t i = 30; i < 33; ++i) s[i].wrench.fz = 0.0;  // 3 quiet frames < D = 5
    const auto spans = find_touches(s, {}, {});
    ASSERT_EQ(spans.size(), 1u);
    EXPECT_EQ(spans[0], (TouchSpan{10, 60}));
}

TEST(Segment, MinimumLengthFilter) {
    std::vector<StreamFrame> s(100);
    for (std::size_t i = 10; i < 29; ++i) s[i].wrench.fz = 1.0;  // 19 frames
    EXPECT_TRUE(find_touches(s, {}, {}).empty());
    s[29].wrench.fz = 1.0;  // 20 frames
    EXPECT_EQ(find_touches(s, {}, {}).size(), 1u);
}

TEST(Segment, TouchRunningToEndOfStream) {
    std::vector<StreamFrame> s(60);
    for (std::size_t i = 30; i < 60; ++i) s[i].wrench.fz = 1.0;
    const auto spans = find_touches(s, {}, {});
    ASSERT_EQ(spans.size(), 1u);
    EXPECT_EQ(spans[0], (TouchSpan{30, 60}));
}

TEST(Resample, IdentityAtTargetLength) {
    std::mt19937_64 rng(11);
    const auto s = random_sequence(rng, 100);
    const auto r = resample(s, 100);
    ASSERT_EQ(r.size(), 100u);
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(r.frames[i], s.frames[i]);
}

TEST(Resample, ConstantInput) {
    TouchSequence s;
    s.frames = {{0.1, 0.2, 1.3, 0.01, 0.02, 0.03}, {0.1, 0.2, 1.3, 0.01, 0.02, 0.03}};
    const auto r = resample(s);
    ASSERT_EQ(r.size(), kCanonicalLength);
    for (const auto& w : r.frames) EXPECT_EQ(w, s.frames[0]);
}

TEST(Resample, RampMatchesClosedForm) {
    TouchSequence s;
    s.frames = {{0, 0, 0, 0, 0, 0}, {1, 0, 0, 0, 0, 0}, {2, 0, 0, 0, 0, 0}};
    const auto r = resample(s, 100);
    for (std::size_t i = 0; i < 100; ++i) EXPECT_NEAR(r.frames[i].fx, 2.0 * i / 99.0, 1e-12);
    EXPECT_EQ(r.frames.front().fx, 0.0);
    EXPECT_EQ(r.frames.back().fx, 2.0);
}

TEST(Resample, PropertiesOnRandomSequences) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> len(2, 400);
    for (int trial = 0; trial < 300; ++trial) {
        auto s = random_sequence(rng, len(rng));
        if (trial % 3 == 0) {
            s.torques.resize(s.size());
            for (auto& t : s.torques) t[1] = 0.5;
        }
        const auto once = resample(s);
        const auto twice = resample(once);
        ASSERT_EQ(once.size(), kCanonicalLength);
        for (std::size_t i = 0; i < kCanonicalLength; ++i) ASSERT_EQ(once.frames[i], twice.frames[i]);
        EXPECT_EQ(once.frames.front(), s.frames.front());
        EXPECT_EQ(once.frames.back(), s.frames.back());
        EXPECT_EQ(once.torques.size(), s.has_torque() ? kCanonicalLength : 0u);
    }
}

TEST(Resample, RejectsShortSequences) {
    TouchSequence s;
    EXPECT_THROW(resample(s), InvalidSequenceError);
    s.frames.resize(1);
    EXPECT_THROW(resample(s), InvalidSequenceError);
}

TEST(TrimTrailingSilence, Examples) {
    TouchSequence s;
    s.frames.resize(100);
    for (std::size_t i = 0; i < 60; ++i) s.frames[i].fz = 1.2;
    EXPECT_EQ(trim_trailing_silence(s, {}).size(), 60u);

    TouchSequence full;
    full.frames.assign(40, WrenchSample{0, 0, 1.0, 0, 0, 0});
    EXPECT_EQ(trim_trailing_silence(full, {}).size(), 40u);

    TouchSequence zeros;
    zeros.frames.resize(30);
    EXPECT_THROW(trim_trailing_silence(zeros, {}), EmptyTouchError);
}

TEST(TrimTrailingSilence, KeepsInteriorQuietFrames) {
    TouchSequence s;
    s.frames.resize(50);
    s.frames[0].fz = 1.0;
    s.frames[20].fz = 1.0;
    EXPECT_EQ(trim_trailing_silence(s, {}).size(), 21u);
}

}  // namespace
}  // namespace tactile
