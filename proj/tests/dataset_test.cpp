#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <unistd.h>

#include "tactile/dataset.hpp"
#include "tactile/synth.hpp"

namespace tactile {
namespace {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("tactile_ds_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

/// Dataset whose sequence i carries i in frames[0].fx, for identity checks.
Dataset indexed_dataset(std::size_t per_class) {
    std::vector<TouchSequence> seqs;
    for (int d = 0; d < 10; ++d)
        for (std::size_t k = 0; k < per_class; ++k) {
            TouchSequence s;
            s.frames.resize(kCanonicalLength);
            s.frames[0].fx = static_cast<double>(seqs.size());
            s.label = d;
            seqs.push_back(std::move(s));
        }
    return Dataset(std::move(seqs));
}

std::multiset<double> ids(const Dataset& ds) {
    std::multiset<double> out;
    for (const auto& s : ds) out.insert(s.frames[0].fx);
    return out;
}

TEST(Dataset, RejectsUnlabeledOrNonCanonical) {
    TouchSequence s;
    s.frames.resize(kCanonicalLength);
    EXPECT_THROW(Dataset({s}), Error);
    s.label = 11;
    EXPECT_THROW(Dataset({s}), Error);
    s.label = 2;
    s.frames.resize(50);
    EXPECT_THROW(Dataset({s}), Error);
}

TEST(LoadExport, RoundTripFullSizeDataset) {
    TempDir dir;
    const Dataset ds = make_synthetic_dataset(50, 3, 17);
    export_dataset(ds, dir.path());

    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir.path())) files += e.path().extension() == ".csv";
    EXPECT_EQ(files, 1500u);

    const Dataset back = load(dir.path());
    ASSERT_EQ(back.size(), 1500u);
    for (int d = 0; d < 10; ++d) EXPECT_EQ(back.class_counts()[d], 150u);

    // Export groups by digit, so compare per digit in order.
    std::array<std::vector<const TouchSequence*>, 10> orig, got;
    for (const auto& s : ds) orig[*s.label].push_back(&s);
    for (const auto& s : back) got[*s.label].push_back(&s);
    for (int d = 0; d < 10; ++d) {
        ASSERT_EQ(orig[d].size(), got[d].size());
        for (std::size_t k = 0; k < orig[d].size(); ++k) {
            EXPECT_EQ(got[d][k]->meta, orig[d][k]->meta);
            for (std::size_t t = 0; t < kCanonicalLength; ++t)
                for (std::size_t c = 0; c < kWrenchChannels; ++c)
                    ASSERT_NEAR(got[d][k]->frames[t][c], orig[d][k]->frames[t][c], 1e-9);
        }
    }
}

TEST(LoadExport, ProvenanceAndTorquesSurvive) {
    TempDir dir;
    TouchSequence s;
    s.frames.resize(kCanonicalLength);
    s.torques.resize(kCanonicalLength);
    for (std::size_t t = 0; t < kCanonicalLength; ++t) {
        s.frames[t].fz = 1.0 + 0.01 * static_cast<double>(t);
        s.torques[t][1] = 0.3;
    }
    s.label = 7;
    s.meta.user_id = "alice";
    s.meta.xyz = {400, 10, 250};
    s.provenance = {Origin::Rotated, -90.0};
    export_dataset(Dataset({s}), dir.path());
    const Dataset back = load(dir.path());
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].frames, s.frames);
    EXPECT_EQ(back[0].torques, s.torques);
    EXPECT_EQ(back[0].meta, s.meta);
    EXPECT_EQ(back[0].provenance, s.provenance);
}

TEST(LoadExport, EmptyDatasetExportsEmptyTree) {
    TempDir dir;
    export_dataset(Dataset{}, dir.path() / "out");
    EXPECT_TRUE(fs::is_directory(dir.path() / "out"));
    EXPECT_TRUE(fs::is_empty(dir.path() / "out"));
    EXPECT_THROW(load(dir.path() / "out"), LoadError);
}

TEST(Load, ResamplesNonCanonicalLengths) {
    TempDir dir;
    fs::create_directories(dir.path() / "4");
    std::vector<StreamFrame> frames(57);
    TouchSequence expected_src;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        frames[i].t = 0.01 * static_cast<double>(i);
        frames[i].wrench = {std::sin(0.1 * i), std::cos(0.1 * i), 1.0 + 0.01 * i, 0.01 * i, -0.02, 0.003 * i};
        expected_src.frames.push_back(frames[i].wrench);
    }
    write_stream_csv(dir.path() / "4" / "a.csv", frames);
    const Dataset ds = load(dir.path());
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].label, 4);
    const auto expected = resample(expected_src, kCanonicalLength);
    for (std::size_t t = 0; t < kCanonicalLength; ++t)
        for (std::size_t c = 0; c < kWrenchChannels; ++c) EXPECT_EQ(ds[0].frames[t][c], expected.frames[t][c]);
}

TEST(Load, Errors) {
    TempDir dir;
    EXPECT_THROW(load(dir.path()), LoadError);                   // empty
    EXPECT_THROW(load(dir.path() / "missing"), LoadError);       // not a directory

    fs::create_directories(dir.path() / "12");
    EXPECT_THROW(load(dir.path()), LoadError);                   // unknown digit dir
    fs::remove_all(dir.path() / "12");

    fs::create_directories(dir.path() / "3");
    {
        std::ofstream(dir.path() / "3" / "bad.csv") << "t,fx,fy,fz,mx,my,mz\n0,1,2,3,4,5\n";
    }
    EXPECT_THROW(load(dir.path()), LoadError);                   // short row
    {
        std::ofstream(dir.path() / "3" / "bad.csv") << "t,fx,fy,fz,mx,my,mz\n0,1,2,x,4,5,6\n1,1,2,3,4,5,6\n";
    }
    EXPECT_THROW(load(dir.path()), LoadError);                   // non-numeric
    {
        std::ofstream(dir.path() / "3" / "bad.csv") << "t,fx,fy,mx,my,mz\n0,1,2,4,5,6\n1,1,2,4,5,6\n";
    }
    EXPECT_THROW(load(dir.path()), LoadError);                   // missing column
}

TEST(Load, WrenchOnlyFilesAndColumnMap) {
    TempDir dir;
    fs::create_directories(dir.path() / "0");
    {
        std::ofstream f(dir.path() / "0" / "s.csv");
        f << "time,Fx,Fy,Fz,Mx,My,Mz\n";
        for (int i = 0; i < 10; ++i) f << i * 0.01 << ",0.1,0.2," << 1.0 + i << ",0.01,0.02,0.03\n";
    }
    LoadOptions opts;
    opts.column_map = {{"t", "time"}, {"fx", "Fx"}, {"fy", "Fy"}, {"fz", "Fz"},
                       {"mx", "Mx"}, {"my", "My"}, {"mz", "Mz"}};
    const Dataset ds = load(dir.path(), opts);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_FALSE(ds[0].has_torque());
    EXPECT_EQ(ds[0].frames.front().fz, 1.0);
    EXPECT_EQ(ds[0].frames.back().fz, 10.0);
}

TEST(Load, OptionalCompensation) {
    TempDir dir;
    fs::create_directories(dir.path() / "1");
    std::vector<StreamFrame> frames(20);
    for (auto& f : frames) f.wrench = {0.2, 0, 0.1, 0, 0, 0};
    write_stream_csv(dir.path() / "1" / "s.csv", frames);
    LoadOptions opts;
    opts.compensate = true;
    const Dataset ds = load(dir.path(), opts);
    EXPECT_NEAR(ds[0].frames.back().fx, 0.0, 1e-12);
    EXPECT_EQ(load(dir.path())[0].frames.back().fx, 0.2);
}

TEST(Split, SeventyThirtyStratified) {
    const Dataset ds = indexed_dataset(150);
    const auto sp = split(ds, {0.7, 42, true});
    EXPECT_EQ(sp.train.size(), 1050u);
    EXPECT_EQ(sp.test.size(), 450u);
    for (int d = 0; d < 10; ++d) {
        EXPECT_EQ(sp.train.class_counts()[d], 105u);
        EXPECT_EQ(sp.test.class_counts()[d], 45u);
    }
}

TEST(Split, DisjointExhaustiveAndDeterministic) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> per(2, 40);
    std::uniform_real_distribution<double> frac(0.1, 0.9);
    for (int trial = 0; trial < 30; ++trial) {
        const Dataset ds = indexed_dataset(per(rng));
        const SplitConfig cfg{frac(rng), static_cast<std::uint64_t>(trial), trial % 2 == 0};
        const auto a = split(ds, cfg);
        const auto b = split(ds, cfg);
        EXPECT_EQ(ids(a.train), ids(b.train));

        auto all = ids(a.train);
        for (double id : ids(a.test)) {
            EXPECT_EQ(all.count(id), 0u);
            all.insert(id);
        }
        EXPECT_EQ(all, ids(ds));
        if (cfg.stratified) {
            for (int d = 0; d < 10; ++d) {
                const double exact = static_cast<double>(ds.class_counts()[d]) * cfg.train_fraction;
                EXPECT_LE(std::abs(static_cast<double>(a.train.class_counts()[d]) - exact), 1.0);
            }
        } else {
            EXPECT_LE(std::abs(static_cast<double>(a.train.size()) - ds.size() * cfg.train_fraction), 1.0);
        }
    }
}

TEST(Split, DifferentSeedsDiffer) {
    const Dataset ds = indexed_dataset(20);
    EXPECT_NE(ids(split(ds, {0.7, 1, true}).train), ids(split(ds, {0.7, 2, true}).train));
}

TEST(Split, Errors) {
    EXPECT_THROW(split(Dataset{}, {}), SplitError);
    const Dataset ds = indexed_dataset(1);
    EXPECT_THROW(split(ds, {0.7, 0, true}), SplitError);
    EXPECT_NO_THROW(split(ds, {0.7, 0, false}));
    EXPECT_THROW(split(indexed_dataset(5), {1.0, 0, true}), SplitError);
    EXPECT_THROW(split(indexed_dataset(5), {0.0, 0, true}), SplitError);
}

}  // namespace
}  // namespace tactile
