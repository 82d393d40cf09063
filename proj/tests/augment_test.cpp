#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tactile/augment.hpp"
#include "tactile/synth.hpp"

namespace tactile {
namespace {

TouchSequence random_canonical(std::mt19937_64& rng, int label = 3) {
    std::normal_distribution<double> unit(0.0, 1.0);
    TouchSequence s;
    s.frames.resize(kCanonicalLength);
    for (auto& w : s.frames)
        for (std::size_t c = 0; c < kWrenchChannels; ++c) w[c] = unit(rng) * (c >= 3 ? 0.1 : 1.0);
    s.label = label;
    return s;
}

TEST(ReverseDigit, SingleFrameSignMap) {
    TouchSequence s;
    s.frames = {{1, 2, 3, 0.1, 0.2, 0.3}};
    s.label = 4;
    const auto r = reverse_digit(s);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r.frames[0], (WrenchSample{-1, -2, 3, -0.1, 0.2, -0.3}));
    EXPECT_EQ(r.label, 4);
    EXPECT_EQ(r.provenance.origin, Origin::Reversed);
}

TEST(ReverseDigit, AllZero) {
    TouchSequence s;
    s.frames.resize(kCanonicalLength);
    for (const auto& w : reverse_digit(s).frames)
        for (std::size_t c = 0; c < kWrenchChannels; ++c) EXPECT_EQ(std::abs(w[c]), 0.0);
}

TEST(ReverseDigit, TwoFramesMatchElementwiseOracle) {
    const WrenchSample a{1, 2, 3, 4, 5, 6}, b{-7, 8, -9, 10, -11, 12};
    TouchSequence s;
    s.frames = {a, b};
    // time reversal, then the per-channel sign vector
    const double sign[6] = {-1, -1, 1, -1, 1, -1};
    const WrenchSample src[2] = {b, a};
    const auto r = reverse_digit(s);
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t c = 0; c < kWrenchChannels; ++c) EXPECT_EQ(r.frames[t][c], sign[c] * src[t][c]);
}

TEST(RotateDigit, ZeroAngleIsIdentity) {
    std::mt19937_64 rng(1);
    const auto s = random_canonical(rng);
    const auto r = rotate_digit(s, RotationAngle(0));
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(r.frames[i], s.frames[i]);
}

TEST(RotateDigit, QuarterTurn) {
    TouchSequence s;
    s.frames = {{1, 0, 0.7, 0, 1, 0.2}};
    const auto r = rotate_digit(s, RotationAngle(90));
    // R_z(90) = [[0,-1,0],[1,0,0],[0,0,1]]
    EXPECT_NEAR(r.frames[0].fx, 0.0, 1e-15);
    EXPECT_NEAR(r.frames[0].fy, 1.0, 1e-15);
    EXPECT_EQ(r.frames[0].fz, 0.7);
    EXPECT_NEAR(r.frames[0].mx, -1.0, 1e-15);
    EXPECT_NEAR(r.frames[0].my, 0.0, 1e-15);
    EXPECT_EQ(r.frames[0].mz, 0.2);
    EXPECT_EQ(r.provenance.origin, Origin::Rotated);
    EXPECT_EQ(r.provenance.angle_deg, 90.0);
}

TEST(RotationAngle, Normalization) {
    EXPECT_EQ(RotationAngle(180).degrees(), 180.0);
    EXPECT_EQ(RotationAngle(-180).degrees(), 180.0);
    EXPECT_EQ(RotationAngle(270).degrees(), -90.0);
    EXPECT_EQ(RotationAngle(-450).degrees(), -90.0);
    EXPECT_EQ(RotationAngle(720).degrees(), 0.0);
    EXPECT_THROW(RotationAngle(std::nan("")), Error);
}

TEST(AugmentProperties, OverRandomSequences) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> angle(-180.0, 180.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto s = random_canonical(rng, trial % 10);
        const RotationAngle a(angle(rng)), b(angle(rng));

        const auto rr = reverse_digit(reverse_digit(s));
        ASSERT_EQ(rr.size(), s.size());
        for (std::size_t i = 0; i < s.size(); ++i) ASSERT_EQ(rr.frames[i], s.frames[i]);
        EXPECT_EQ(rr.provenance.origin, Origin::Original);

        const auto ra = rotate_digit(s, a);
        const auto back = rotate_digit(ra, RotationAngle(-a.degrees()));
        const auto rab = rotate_digit(ra, b);
        const auto direct = rotate_digit(s, RotationAngle(a.degrees() + b.degrees()));
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto &w = s.frames[i], &r = ra.frames[i];
            for (std::size_t c = 0; c < kWrenchChannels; ++c) {
                ASSERT_NEAR(back.frames[i][c], w[c], 1e-12);
                ASSERT_NEAR(rab.frames[i][c], direct.frames[i][c], 1e-9);
            }
            ASSERT_NEAR(std::hypot(r.fx, r.fy), std::hypot(w.fx, w.fy), 1e-9);
            ASSERT_NEAR(std::hypot(r.mx, r.my), std::hypot(w.mx, w.my), 1e-9);
            ASSERT_EQ(r.fz, w.fz);
            ASSERT_EQ(r.mz, w.mz);
        }
        EXPECT_EQ(ra.label, s.label);
        EXPECT_EQ(ra.size(), s.size());
    }
}

TEST(AugmentDataset, TableSizes) {
    const Dataset ds = make_synthetic_dataset(50, 3, 5);
    ASSERT_EQ(ds.size(), 1500u);
    const Dataset rev = augment_dataset(ds, ReversedMode{});
    EXPECT_EQ(rev.size(), 3000u);
    EXPECT_EQ(rev.filter(Origin::Reversed).size(), 1500u);
    const Dataset rot = augment_dataset(ds, RotatedMode{{RotationAngle(90), RotationAngle(-90)}});
    EXPECT_EQ(rot.size(), 4500u);
    EXPECT_EQ(rot.filter(Origin::Rotated).size(), 3000u);
    for (int d = 0; d < 10; ++d) {
        EXPECT_EQ(rev.class_counts()[d], 2 * ds.class_counts()[d]);
        EXPECT_EQ(rot.class_counts()[d], 3 * ds.class_counts()[d]);
    }
    // originals come first and are untouched
    for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(rev[i].frames, ds[i].frames);
    EXPECT_EQ(augment_dataset(Dataset{}, ReversedMode{}).size(), 0u);
    EXPECT_EQ(augment_dataset(Dataset{}, RotatedMode{{RotationAngle(90)}}).size(), 0u);
}

TEST(AugmentDataset, RotatedProvenanceAngles) {
    const Dataset ds = make_synthetic_dataset(1, 1, 9);
    const Dataset rot = augment_dataset(ds, RotatedMode{{RotationAngle(90), RotationAngle(-90)}});
    std::size_t plus = 0, minus = 0;
    for (const auto& s : rot) {
        if (s.provenance.origin != Origin::Rotated) continue;
        plus += s.provenance.angle_deg == 90.0;
        minus += s.provenance.angle_deg == -90.0;
    }
    EXPECT_EQ(plus, 10u);
    EXPECT_EQ(minus, 10u);
}

TEST(AugmentMode, Parse) {
    EXPECT_TRUE(std::holds_alternative<ReversedMode>(parse_augment_mode("reversed")));
    const auto r = std::get<RotatedMode>(parse_augment_mode("rotated"));
    ASSERT_EQ(r.angles.size(), 2u);
    EXPECT_EQ(r.angles[0].degrees(), 90.0);
    EXPECT_EQ(r.angles[1].degrees(), -90.0);
    const auto c = std::get<RotatedMode>(parse_augment_mode("rotated=+45,-30.5,270"));
    ASSERT_EQ(c.angles.size(), 3u);
    EXPECT_EQ(c.angles[0].degrees(), 45.0);
    EXPECT_EQ(c.angles[1].degrees(), -30.5);
    EXPECT_EQ(c.angles[2].degrees(), -90.0);
    for (const char* bad : {"", "mirror", "rotated=", "rotated=90,", "rotated=x", "rotated=9 0"})
        EXPECT_THROW(parse_augment_mode(bad), Error) << bad;
}

}  // namespace
}  // namespace tactile
