#pragma once

// Streaming recognition: watch a compensated stream for touch onset, capture
// a fixed window, drop the trailing silence, resample, classify, and report.
// The first `baseline_window` frames after construction or reset only seed the
// baseline and are never reported as touches.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tactile/bilstm.hpp"
#include "tactile/signal.hpp"

namespace tactile {

struct OnlineConfig {
    TouchThresholds thresholds{};
    std::size_t baseline_window = 50;
    std::size_t capture_window = 300;
    double confidence_threshold = 0.80;
};

struct RecognitionEvent {
    enum class Kind { TouchStarted, Digit, LowConfidence };

    Kind kind = Kind::TouchStarted;
    std::size_t onset_frame = 0;
    std::optional<Prediction> prediction;  // absent for TouchStarted
    /// Set when the capture held no above-threshold frame after trimming.
    bool degenerate = false;
};

inline const char* kind_name(RecognitionEvent::Kind k) {
    switch (k) {
        case RecognitionEvent::Kind::TouchStarted: return "touch_started";
        case RecognitionEvent::Kind::Digit: return "digit";
        default: return "low_confidence";
    }
}

/// Per-session recognizer. Not reentrant; feed frames from one thread.
class StreamClassifier {
    static constexpr double kInf = std::numeric_limits<double>::infinity();

public:
    enum class Phase { Idle, Capturing };

    StreamClassifier(std::shared_ptr<const BiLstmClassifier> model, OnlineConfig cfg = {})
        : model_(std::move(model)), cfg_(cfg), baseline_(cfg.baseline_window) {
        if (!model_) throw Error("stream classifier needs a model");
        if (cfg_.capture_window < 2) throw Error("capture window must be >= 2 frames");
    }

    Phase phase() const { return phase_; }
    std::size_t buffered() const { return capture_.size(); }
    std::size_t frames_seen() const { return frame_index_; }
    const OnlineConfig& config() const { return cfg_; }
    const BaselineState& baseline() const { return baseline_; }

    /// Consumes one raw frame. Emits TouchStarted on onset and a Digit or
    /// LowConfidence event once the capture window is full.
    std::optional<RecognitionEvent> push_frame(const StreamFrame& raw) {
        const std::size_t index = frame_index_++;
        if (phase_ == Phase::Idle) {
            if (baseline_.buffered() < cfg_.baseline_window) {
                // Warm-up: the first window of frames only seeds the baseline.
                compensate(raw, baseline_, TouchThresholds{kInf, kInf});
                return std::nullopt;
            }
            const StreamFrame frame = compensate(raw, baseline_, cfg_.thresholds);
            if (!is_touch(frame, cfg_.thresholds)) return std::nullopt;
            phase_ = Phase::Capturing;
            onset_ = index;
            capture_.clear();
            capture_.push_back(frame);
            RecognitionEvent ev;
            ev.kind = RecognitionEvent::Kind::TouchStarted;
            ev.onset_frame = onset_;
            return ev;
        }

        // The baseline stays frozen for the whole capture.
        if (!raw.wrench.finite() || (raw.torque && !raw.torque->finite()))
            throw DataQualityError("non-finite value in stream frame at t=" + std::to_string(raw.t));
        StreamFrame frame = raw;
        frame.wrench = raw.wrench - baseline_.baseline();
        if (raw.torque && baseline_.torque_baseline())
            for (std::size_t j = 0; j < kJoints; ++j) (*frame.torque)[j] -= (*baseline_.torque_baseline())[j];
        capture_.push_back(frame);
        if (capture_.size() < cfg_.capture_window) return std::nullopt;
        return classify_capture();
    }

    void reset() {
        phase_ = Phase::Idle;
        capture_.clear();
        baseline_.reset();
        frame_index_ = 0;
    }

private:
    RecognitionEvent classify_capture() {
        RecognitionEvent ev;
        ev.onset_frame = onset_;
        phase_ = Phase::Idle;

        TouchSequence seq;
        const bool torque = std::all_of(capture_.begin(), capture_.end(),
                                        [](const StreamFrame& f) { return f.torque.has_value(); });
        for (const auto& f : capture_) {
            seq.frames.push_back(f.wrench);
            if (torque) seq.torques.push_back(*f.torque);
        }
        capture_.clear();

        std::optional<TouchSequence> trimmed;
        try {
            trimmed = trim_trailing_silence(seq, cfg_.thresholds);
            if (trimmed->size() < 2) trimmed.reset();
        } catch (const EmptyTouchError&) {
        }
        if (!trimmed) {
            ev.kind = RecognitionEvent::Kind::LowConfidence;
            ev.prediction = Prediction::uniform(model_->dims().classes);
            ev.degenerate = true;
            return ev;
        }
        ev.prediction = forward(*model_, resample(*trimmed, kCanonicalLength));
        ev.kind = ev.prediction->confidence >= cfg_.confidence_threshold ? RecognitionEvent::Kind::Digit
                                                                         : RecognitionEvent::Kind::LowConfidence;
        return ev;
    }

    std::shared_ptr<const BiLstmClassifier> model_;
    OnlineConfig cfg_;
    BaselineState baseline_;
    Phase phase_ = Phase::Idle;
    std::vector<StreamFrame> capture_;
    std::size_t onset_ = 0;
    std::size_t frame_index_ = 0;
};

/// Feeds every frame through `sc` in order and collects the events.
inline std::vector<RecognitionEvent> replay(StreamClassifier& sc, std::span<const StreamFrame> frames) {
    std::vector<RecognitionEvent> out;
    for (const auto& f : frames)
        if (auto ev = sc.push_frame(f)) out.push_back(std::move(*ev));
    return out;
}

}  // namespace tactile
