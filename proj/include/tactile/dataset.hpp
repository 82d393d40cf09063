#pragma once

// Labeled collections of canonical sequences: on-disk layout, loading,
// export and stratified train/test splitting.
//
// Layout: <root>/<digit>/<sequence_id>.csv with header
//   t,tau1,tau2,tau3,tau4,tau5,tau6,tau7,fx,fy,fz,mx,my,mz
// and an optional <root>/<digit>/meta.json sidecar.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "tactile/error.hpp"
#include "tactile/signal.hpp"

namespace tactile {

inline constexpr int kNumClasses = 10;

using ClassCounts = std::array<std::size_t, kNumClasses>;

/// Immutable set of labeled, canonical-length sequences.
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(std::vector<TouchSequence> sequences) : sequences_(std::move(sequences)) {
        for (std::size_t i = 0; i < sequences_.size(); ++i) {
            const auto& s = sequences_[i];
            if (!s.label || *s.label < 0 || *s.label >= kNumClasses)
                throw Error("dataset sequence " + std::to_string(i) + " has no valid label");
            if (s.size() != kCanonicalLength)
                throw Error("dataset sequence " + std::to_string(i) + " has length " +
                            std::to_string(s.size()) + ", expected " +
                            std::to_string(kCanonicalLength));
            ++counts_[static_cast<std::size_t>(*s.label)];
        }
    }

    const std::vector<TouchSequence>& sequences() const { return sequences_; }
    const TouchSequence& operator[](std::size_t i) const { return sequences_[i]; }
    std::size_t size() const { return sequences_.size(); }
    bool empty() const { return sequences_.empty(); }
    const ClassCounts& class_counts() const { return counts_; }

    auto begin() const { return sequences_.begin(); }
    auto end() const { return sequences_.end(); }

    /// Sequences whose provenance matches `origin`.
    Dataset filter(Origin origin) const {
        std::vector<TouchSequence> kept;
        for (const auto& s : sequences_)
            if (s.provenance.origin == origin) kept.push_back(s);
        return Dataset(std::move(kept));
    }

    friend Dataset concat(const Dataset& a, const Dataset& b) {
        std::vector<TouchSequence> all = a.sequences_;
        all.insert(all.end(), b.sequences_.begin(), b.sequences_.end());
        return Dataset(std::move(all));
    }

private:
    std::vector<TouchSequence> sequences_;
    ClassCounts counts_{};
};

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::array<std::string_view, 14> kCsvColumns = {
    "t", "tau1", "tau2", "tau3", "tau4", "tau5", "tau6", "tau7",
    "fx", "fy", "fz", "mx", "my", "mz"};

struct LoadOptions {
    /// Run baseline compensation over each file's frames before resampling.
    bool compensate = false;
    std::size_t baseline_window = 50;
    TouchThresholds thresholds{};
    /// Canonical column name -> column name used in the files. Columns not
    /// listed keep their canonical name.
    std::map<std::string, std::string> column_map;
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Reads one sequence CSV into raw stream frames (no resampling).
inline std::vector<StreamFrame> read_stream_csv(const std::filesystem::path& file,
                                                const std::map<std::string, std::string>& column_map = {}) {
    std::ifstream in(file);
    if (!in) throw LoadError("cannot open " + file.string());

    std::string line;
    if (!std::getline(in, line)) throw LoadError(file.string() + ": missing header");
    const auto header = detail::split_csv_line(line);

    std::array<int, kCsvColumns.size()> index{};
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
        std::string want(kCsvColumns[c]);
        if (auto it = column_map.find(want); it != column_map.end()) want = it->second;
        index[c] = -1;
        for (std::size_t h = 0; h < header.size(); ++h)
            if (detail::trim(header[h]) == want) index[c] = static_cast<int>(h);
        const bool required = c == 0 || c >= 8;
        if (required && index[c] < 0)
            throw LoadError(file.string() + ": missing column '" + want + "'");
    }

    std::vector<StreamFrame> frames;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw LoadError(file.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        auto cell = [&](std::size_t c, double& v) {
            return index[c] >= 0 && detail::parse_double(cells[static_cast<std::size_t>(index[c])], v);
        };
        auto bad = [&](std::size_t c) {
            return LoadError(file.string() + ":" + std::to_string(line_no) + ": bad value in column '" +
                             std::string(kCsvColumns[c]) + "'");
        };

        StreamFrame f;
        if (!cell(0, f.t)) throw bad(0);
        for (std::size_t c = 0; c < kWrenchChannels; ++c)
            if (!cell(8 + c, f.wrench[c])) throw bad(8 + c);

        // Torque columns are either all present or all empty on a row.
        TorqueSample tau;
        std::size_t present = 0;
        for (std::size_t j = 0; j < kJoints; ++j) {
            const int col = index[1 + j];
            if (col < 0 || detail::trim(cells[static_cast<std::size_t>(col)]).empty()) continue;
            if (!cell(1 + j, tau[j])) throw bad(1 + j);
            ++present;
        }
        if (present == kJoints)
            f.torque = tau;
        else if (present != 0)
            throw LoadError(file.string() + ":" + std::to_string(line_no) + ": partial torque row");

        if (!f.wrench.finite() || (f.torque && !f.torque->finite()))
            throw LoadError(file.string() + ":" + std::to_string(line_no) + ": non-finite value");
        frames.push_back(f);
    }
    return frames;
}

/// Writes frames in the canonical column order. Torque cells are left empty
/// for frames without torque.
inline void write_stream_csv(const std::filesystem::path& file, const std::vector<StreamFrame>& frames) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) out << (c ? "," : "") << kCsvColumns[c];
    out << '\n';
    for (const auto& f : frames) {
        out << detail::format_double(f.t);
        for (std::size_t j = 0; j < kJoints; ++j)
            out << ',' << (f.torque ? detail::format_double((*f.torque)[j]) : std::string{});
        for (std::size_t c = 0; c < kWrenchChannels; ++c) out << ',' << detail::format_double(f.wrench[c]);
        out << '\n';
    }
    if (!out) throw Error("write failed for " + file.string());
}

// ---------------------------------------------------------------------------
// meta.json

namespace detail {

inline const char* origin_name(Origin o) {
    switch (o) {
        case Origin::Reversed: return "reversed";
        case Origin::Rotated: return "rotated";
        default: return "original";
    }
}

inline Origin parse_origin(const std::string& s) {
    if (s == "reversed") return Origin::Reversed;
    if (s == "rotated") return Origin::Rotated;
    if (s == "original") return Origin::Original;
    throw LoadError("unknown provenance '" + s + "'");
}

inline void read_meta(const nlohmann::json& j, PoseMeta& meta, Provenance* prov) {
    if (j.contains("user_id")) meta.user_id = j.at("user_id").get<std::string>();
    if (j.contains("pose")) {
        const auto& p = j.at("pose");
        if (p.contains("xyz")) meta.xyz = p.at("xyz").get<std::array<double, 3>>();
        if (p.contains("euler")) meta.euler = p.at("euler").get<std::array<double, 3>>();
    }
    if (prov != nullptr && j.contains("origin")) {
        prov->origin = parse_origin(j.at("origin").get<std::string>());
        prov->angle_deg = j.value("angle_deg", 0.0);
    }
}

inline nlohmann::json write_meta(const TouchSequence& s) {
    nlohmann::json j;
    j["user_id"] = s.meta.user_id;
    j["pose"] = {{"xyz", s.meta.xyz}, {"euler", s.meta.euler}};
    j["origin"] = origin_name(s.provenance.origin);
    if (s.provenance.origin == Origin::Rotated) j["angle_deg"] = s.provenance.angle_deg;
    return j;
}

}  // namespace detail

/// Loads a dataset tree. Non-canonical sequence lengths are resampled.
inline Dataset load(const std::filesystem::path& root, const LoadOptions& opts = {}) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw LoadError("dataset root is not a directory: " + root.string());

    std::vector<fs::path> digit_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() != 1 || name[0] < '0' || name[0] > '9')
            throw LoadError("unknown digit directory '" + name + "' in " + root.string());
        digit_dirs.push_back(entry.path());
    }
    std::sort(digit_dirs.begin(), digit_dirs.end());

    std::vector<TouchSequence> sequences;
    for (const auto& dir : digit_dirs) {
        const int digit = dir.filename().string()[0] - '0';

        nlohmann::json meta_json = nlohmann::json::object();
        if (const fs::path meta_file = dir / "meta.json"; fs::exists(meta_file)) {
            std::ifstream in(meta_file);
            try {
                meta_json = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw LoadError(meta_file.string() + ": " + e.what());
            }
        }
        PoseMeta dir_meta;
        detail::read_meta(meta_json, dir_meta, nullptr);

        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
        std::sort(files.begin(), files.end());

        for (const auto& file : files) {
            auto frames = read_stream_csv(file, opts.column_map);
            if (frames.size() < 2)
                throw LoadError(file.string() + ": need at least 2 frames, got " + std::to_string(frames.size()));
            if (opts.compensate) {
                BaselineState base(opts.baseline_window);
                for (auto& f : frames) f = compensate(f, base, opts.thresholds);
            }

            TouchSequence seq;
            seq.label = digit;
            seq.meta = dir_meta;
            const bool torque = std::all_of(frames.begin(), frames.end(),
                                            [](const StreamFrame& f) { return f.torque.has_value(); });
            for (const auto& f : frames) {
                seq.frames.push_back(f.wrench);
                if (torque) seq.torques.push_back(*f.torque);
            }
            const std::string id = file.stem().string();
            if (meta_json.contains("sequences") && meta_json["sequences"].contains(id))
                detail::read_meta(meta_json["sequences"][id], seq.meta, &seq.provenance);
            sequences.push_back(resample(seq));
        }
    }
    if (sequences.empty()) throw LoadError("dataset at " + root.string() + " is empty");
    return Dataset(std::move(sequences));
}

/// Writes `ds` in the canonical layout. Existing files with the same names are
/// overwritten.
inline void export_dataset(const Dataset& ds, const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw Error("cannot create " + root.string() + ": " + ec.message());

    std::array<nlohmann::json, kNumClasses> metas;
    std::array<std::size_t, kNumClasses> next_id{};
    for (const auto& s : ds) {
        const int d = *s.label;
        const fs::path dir = root / std::to_string(d);
        fs::create_directories(dir, ec);
        if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

        char id[16];
        std::snprintf(id, sizeof(id), "%06zu", next_id[static_cast<std::size_t>(d)]++);
        std::vector<StreamFrame> frames(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            frames[i].t = static_cast<double>(i) / 100.0;
            frames[i].wrench = s.frames[i];
            if (s.has_torque()) frames[i].torque = s.torques[i];
        }
        write_stream_csv(dir / (std::string(id) + ".csv"), frames);
        metas[static_cast<std::size_t>(d)]["sequences"][id] = detail::write_meta(s);
    }
    for (int d = 0; d < kNumClasses; ++d) {
        if (metas[static_cast<std::size_t>(d)].is_null()) continue;
        std::ofstream out(root / std::to_string(d) / "meta.json");
        out << metas[static_cast<std::size_t>(d)].dump(1) << '\n';
        if (!out) throw Error("cannot write meta.json for digit " + std::to_string(d));
    }
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitConfig {
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct Split {
    Dataset train;
    Dataset test;
};

/// Deterministic (given the seed) disjoint train/test partition. Within each
/// stratum round(n * train_fraction) samples go to train, clamped so both
/// sides receive at least one sample.
inline Split split(const Dataset& ds, const SplitConfig& cfg) {
    if (ds.empty()) throw SplitError("cannot split an empty dataset");
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
        throw SplitError("train_fraction must lie in (0, 1)");

    std::vector<std::vector<std::size_t>> strata;
    if (cfg.stratified) {
        strata.resize(kNumClasses);
        for (std::size_t i = 0; i < ds.size(); ++i) strata[static_cast<std::size_t>(*ds[i].label)].push_back(i);
        for (int d = 0; d < kNumClasses; ++d) {
            const auto n = strata[static_cast<std::size_t>(d)].size();
            if (n == 1)
                throw SplitError("class " + std::to_string(d) + " has fewer than 2 samples");
        }
    } else {
        strata.emplace_back(ds.size());
        std::iota(strata[0].begin(), strata[0].end(), std::size_t{0});
        if (ds.size() < 2) throw SplitError("need at least 2 samples to split");
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<char> in_train(ds.size(), 0);
    for (auto& idx : strata) {
        if (idx.empty()) continue;
        std::shuffle(idx.begin(), idx.end(), rng);
        const double want = static_cast<double>(idx.size()) * cfg.train_fraction;
        auto n_train = static_cast<std::size_t>(std::llround(want));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        for (std::size_t k = 0; k < n_train; ++k) in_train[idx[k]] = 1;
    }

    std::vector<TouchSequence> train, test;
    for (std::size_t i = 0; i < ds.size(); ++i) (in_train[i] ? train : test).push_back(ds[i]);
    return {Dataset(std::move(train)), Dataset(std::move(test))};
}

}  // namespace tactile
