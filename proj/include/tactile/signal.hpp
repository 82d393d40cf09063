#pragma once

// Wrench/torque stream types, baseline compensation, touch segmentation and
// fixed-length resampling.

#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tactile/error.hpp"

namespace tactile {

inline constexpr std::size_t kWrenchChannels = 6;
inline constexpr std::size_t kJoints = 7;
inline constexpr std::size_t kCanonicalLength = 100;

/// End-effector force (N) and moment (Nm).
struct WrenchSample {
    double fx = 0, fy = 0, fz = 0;
    double mx = 0, my = 0, mz = 0;

    double& operator[](std::size_t i) {
        switch (i) {
            case 0: return fx;
            case 1: return fy;
            case 2: return fz;
            case 3: return mx;
            case 4: return my;
            default: return mz;
        }
    }
    double operator[](std::size_t i) const { return const_cast<WrenchSample&>(*this)[i]; }

    bool finite() const {
        for (std::size_t i = 0; i < kWrenchChannels; ++i)
            if (!std::isfinite((*this)[i])) return false;
        return true;
    }

    friend WrenchSample operator-(WrenchSample a, const WrenchSample& b) {
        for (std::size_t i = 0; i < kWrenchChannels; ++i) a[i] -= b[i];
        return a;
    }
    friend bool operator==(const WrenchSample&, const WrenchSample&) = default;
};

/// External joint torques, axis 1..7 stored at index 0..6.
struct TorqueSample {
    std::array<double, kJoints> tau{};

    double& operator[](std::size_t i) { return tau[i]; }
    double operator[](std::size_t i) const { return tau[i]; }

    bool finite() const {
        for (double v : tau)
            if (!std::isfinite(v)) return false;
        return true;
    }
    friend bool operator==(const TorqueSample&, const TorqueSample&) = default;
};

struct StreamFrame {
    double t = 0;
    WrenchSample wrench;
    std::optional<TorqueSample> torque;
};

struct PoseMeta {
    std::array<double, 3> xyz{450.0, 0.0, 300.0};  // mm
    std::array<double, 3> euler{0.0, 0.0, 0.0};    // Z-Y-X, degrees
    std::string user_id;
    friend bool operator==(const PoseMeta&, const PoseMeta&) = default;
};

/// Where a sequence came from; augmented copies record their transform.
enum class Origin { Original, Reversed, Rotated };

struct Provenance {
    Origin origin = Origin::Original;
    double angle_deg = 0.0;  // only meaningful for Rotated
    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// One segmented digit drawing.
struct TouchSequence {
    std::vector<WrenchSample> frames;
    /// Either empty or the same length as `frames`.
    std::vector<TorqueSample> torques;
    std::optional<int> label;
    PoseMeta meta;
    Provenance provenance;

    std::size_t size() const { return frames.size(); }
    bool has_torque() const { return !torques.empty(); }
};

struct TouchThresholds {
    double force = 0.5;   // N, on |fz|
    double torque = 0.2;  // Nm, on |tau2|
};

struct SegmentConfig {
    std::size_t debounce = 5;     // consecutive quiet frames that end a touch
    std::size_t min_length = 20;  // shorter touches are dropped
};

inline bool is_touch(const WrenchSample& w, const TorqueSample* tau, const TouchThresholds& th) {
    if (tau != nullptr && std::abs((*tau)[1]) > th.torque) return true;
    return std::abs(w.fz) > th.force;
}

/// True iff |tau2| exceeds the torque threshold (when torque is present) or
/// |fz| exceeds the force threshold. Expects a compensated frame.
inline bool is_touch(const StreamFrame& frame, const TouchThresholds& th) {
    return is_touch(frame.wrench, frame.torque ? &*frame.torque : nullptr, th);
}

/// Sliding-window baseline estimated from non-touch frames.
///
/// The baseline is the arithmetic mean of the last `window` frames that were
/// judged non-touch after subtraction. While a touch is in progress the window
/// is left untouched, so contact forces never leak into the offset estimate.
class BaselineState {
public:
    explicit BaselineState(std::size_t window = 50) : window_(window) {
        if (window_ == 0) throw Error("baseline window must be >= 1");
    }

    std::size_t window() const { return window_; }
    std::size_t buffered() const { return wrenches_.size(); }
    const WrenchSample& baseline() const { return wrench_mean_; }
    const std::optional<TorqueSample>& torque_baseline() const { return torque_mean_; }

    void push(const StreamFrame& raw) {
        wrenches_.push_back(raw.wrench);
        if (wrenches_.size() > window_) wrenches_.pop_front();
        wrench_mean_ = WrenchSample{};
        for (const auto& w : wrenches_)
            for (std::size_t c = 0; c < kWrenchChannels; ++c) wrench_mean_[c] += w[c];
        for (std::size_t c = 0; c < kWrenchChannels; ++c)
            wrench_mean_[c] /= static_cast<double>(wrenches_.size());

        if (raw.torque) {
            torques_.push_back(*raw.torque);
            if (torques_.size() > window_) torques_.pop_front();
            TorqueSample mean;
            for (const auto& t : torques_)
                for (std::size_t j = 0; j < kJoints; ++j) mean[j] += t[j];
            for (std::size_t j = 0; j < kJoints; ++j) mean[j] /= static_cast<double>(torques_.size());
            torque_mean_ = mean;
        }
    }

    void reset() {
        wrenches_.clear();
        torques_.clear();
        wrench_mean_ = WrenchSample{};
        torque_mean_.reset();
    }

private:
    std::size_t window_;
    std::deque<WrenchSample> wrenches_;
    std::deque<TorqueSample> torques_;
    WrenchSample wrench_mean_;
    std::optional<TorqueSample> torque_mean_;
};

/// Subtracts the current baseline from `frame`. Frames that are still below
/// threshold after subtraction feed the baseline window; touching frames do not.
inline StreamFrame compensate(const StreamFrame& frame, BaselineState& state,
                              const TouchThresholds& th) {
    if (!frame.wrench.finite() || (frame.torque && !frame.torque->finite()) ||
        !std::isfinite(frame.t))
        throw DataQualityError("non-finite value in stream frame at t=" + std::to_string(frame.t));

    StreamFrame out = frame;
    out.wrench = frame.wrench - state.baseline();
    if (frame.torque && state.torque_baseline()) {
        for (std::size_t j = 0; j < kJoints; ++j) (*out.torque)[j] -= (*state.torque_baseline())[j];
    }
    if (!is_touch(out, th)) state.push(frame);
    return out;
}

/// Half-open frame interval [begin, end) of one touch inside a stream.
struct TouchSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    friend bool operator==(const TouchSpan&, const TouchSpan&) = default;
};

/// Locates touches in a compensated stream.
///
/// A touch opens on the first above-threshold frame and closes once `debounce`
/// consecutive quiet frames follow; the quiet tail is not part of the touch.
/// Touches shorter than `min_length` frames are discarded.
inline std::vector<TouchSpan> find_touches(std::span<const StreamFrame> stream,
                                           const TouchThresholds& th,
                                           const SegmentConfig& cfg = {}) {
    std::vector<TouchSpan> out;
    const std::size_t debounce = cfg.debounce == 0 ? 1 : cfg.debounce;
    auto emit = [&](std::size_t begin, std::size_t end) {
        if (end - begin >= cfg.min_length) out.push_back({begin, end});
    };

    bool active = false;
    std::size_t begin = 0, last_touch = 0, quiet = 0;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const bool touching = is_touch(stream[i], th);
        if (!active) {
            if (touching) {
                active = true;
                begin = last_touch = i;
                quiet = 0;
            }
            continue;
        }
        if (touching) {
            last_touch = i;
            quiet = 0;
        } else if (++quiet >= debounce) {
            emit(begin, last_touch + 1);
            active = false;
        }
    }
    if (active) emit(begin, last_touch + 1);
    return out;
}

/// Cuts a compensated stream into one TouchSequence per detected touch.
/// Torques are carried over only when every frame of the touch has them.
inline std::vector<TouchSequence> segment(std::span<const StreamFrame> stream,
                                          const TouchThresholds& th,
                                          const SegmentConfig& cfg = {}) {
    std::vector<TouchSequence> out;
    for (const TouchSpan& span : find_touches(stream, th, cfg)) {
        TouchSequence seq;
        bool all_torque = true;
        for (std::size_t i = span.begin; i < span.end; ++i)
            all_torque = all_torque && stream[i].torque.has_value();
        for (std::size_t i = span.begin; i < span.end; ++i) {
            seq.frames.push_back(stream[i].wrench);
            if (all_torque) seq.torques.push_back(*stream[i].torque);
        }
        out.push_back(std::move(seq));
    }
    return out;
}

namespace detail {

template <typename Sample, std::size_t N>
std::vector<Sample> resample_channels(const std::vector<Sample>& in, std::size_t target) {
    const std::size_t len = in.size();
    std::vector<Sample> out(target);
    const double scale = static_cast<double>(len - 1) / static_cast<double>(target - 1);
    for (std::size_t i = 0; i < target; ++i) {
        if (i == target - 1) {
            out[i] = in[len - 1];
            continue;
        }
        const double pos = static_cast<double>(i) * scale;
        std::size_t j = static_cast<std::size_t>(pos);
        if (j >= len - 1) j = len - 2;
        const double frac = pos - static_cast<double>(j);
        for (std::size_t c = 0; c < N; ++c) {
            const double a = in[j][c];
            const double b = in[j + 1][c];
            out[i][c] = frac == 0.0 ? a : a + frac * (b - a);
        }
    }
    return out;
}

}  // namespace detail

/// Piecewise-linear resampling of every channel onto `target` uniformly spaced
/// points. Endpoints are copied exactly; an input already at `target` length is
/// returned unchanged.
inline TouchSequence resample(const TouchSequence& seq, std::size_t target = kCanonicalLength) {
    if (seq.size() < 2) throw InvalidSequenceError("cannot resample a sequence of length " +
                                                   std::to_string(seq.size()));
    if (target < 2) throw InvalidSequenceError("resample target must be >= 2");
    if (seq.has_torque() && seq.torques.size() != seq.frames.size())
        throw InvalidSequenceError("torque and wrench frame counts differ");
    if (seq.size() == target) return seq;

    TouchSequence out = seq;
    out.frames = detail::resample_channels<WrenchSample, kWrenchChannels>(seq.frames, target);
    if (seq.has_torque()) out.torques = detail::resample_channels<TorqueSample, kJoints>(seq.torques, target);
    return out;
}

/// Drops the trailing run of below-threshold frames left by a fixed-duration
/// capture window.
inline TouchSequence trim_trailing_silence(const TouchSequence& seq, const TouchThresholds& th) {
    std::size_t keep = seq.size();
    while (keep > 0) {
        const std::size_t i = keep - 1;
        const TorqueSample* tau = seq.has_torque() ? &seq.torques[i] : nullptr;
        if (is_touch(seq.frames[i], tau, th)) break;
        --keep;
    }
    if (keep == 0) throw EmptyTouchError("sequence has no above-threshold frame");
    TouchSequence out = seq;
    out.frames.resize(keep);
    if (out.has_torque()) out.torques.resize(keep);
    return out;
}

}  // namespace tactile
