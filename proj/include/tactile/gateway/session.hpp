#pragma once

// One client session: JSON messages in, JSON messages out.
//
// Client -> server, tagged by "type":
//   frame           {"wrench": [fx, fy, fz, mx, my, mz], "torque"?: [7], "t"?: s}
//   stroke          {"points": [{"x": mm, "y": mm, "t": ms}, ...]}
//   confirm_touch, arm_touch, double_tap, motion_complete, reset
// Server -> client, each with a per-session "seq" starting at 1:
//   touch_started, prediction, hfsm_state, action, error
//
// The session owns no clock. Timer requests come back as TimerCommands and the
// owner calls fire_timer when one expires; stale generations are ignored.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tactile/gateway/config.hpp"
#include "tactile/hfsm.hpp"
#include "tactile/online.hpp"
#include "tactile/synth.hpp"

namespace tactile::gateway {

enum class SessionTimer { Confirm, DoubleTap, Motion };

inline const char* timer_name(SessionTimer t) {
    switch (t) {
        case SessionTimer::Confirm: return "confirm";
        case SessionTimer::DoubleTap: return "double_tap";
        default: return "motion";
    }
}

struct TimerCommand {
    SessionTimer timer = SessionTimer::Confirm;
    std::uint64_t generation = 0;
    std::optional<double> arm_s;  // empty: cancel
};

struct Output {
    std::vector<nlohmann::json> messages;
    std::vector<TimerCommand> timers;
};

/// Compact serialization that cannot fail on odd bytes in error text.
inline std::string to_wire(const nlohmann::json& msg) {
    return msg.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

class Session {
public:
    Session(std::shared_ptr<const BiLstmClassifier> model, GlobalConfig cfg)
        : cfg_(std::move(cfg)), classifier_(std::move(model), cfg_.online) {}

    const hfsm::State& state() const { return state_; }
    std::uint64_t last_seq() const { return seq_; }
    const std::map<SessionTimer, std::uint64_t>& armed() const { return armed_; }
    const StreamClassifier& classifier() const { return classifier_; }

    /// Handles one raw client message. Never throws for bad input; problems
    /// become an error message and the session carries on.
    Output handle(std::string_view text) {
        nlohmann::json msg;
        try {
            msg = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            Output out;
            error(out, std::string("malformed JSON: ") + e.what());
            return out;
        }
        return handle_message(msg);
    }

    Output handle_message(const nlohmann::json& msg) {
        Output out;
        try {
            dispatch(out, msg);
        } catch (const std::exception& e) {
            error(out, e.what());
        }
        return out;
    }

    /// Delivers an expired timer. Ignored unless `generation` is still armed.
    Output fire_timer(SessionTimer timer, std::uint64_t generation) {
        Output out;
        auto it = armed_.find(timer);
        if (it == armed_.end() || it->second != generation) return out;
        armed_.erase(it);
        switch (timer) {
            case SessionTimer::Confirm: on_event(out, hfsm::Timeout{hfsm::TimerId::Confirm}); break;
            case SessionTimer::DoubleTap: on_event(out, hfsm::Timeout{hfsm::TimerId::DoubleTap}); break;
            case SessionTimer::Motion: on_event(out, hfsm::MotionComplete{}); break;
        }
        return out;
    }

private:
    struct BadMessage : Error {
        using Error::Error;
    };

    void dispatch(Output& out, const nlohmann::json& msg) {
        if (!msg.is_object()) throw BadMessage("message must be a JSON object");
        auto type_it = msg.find("type");
        if (type_it == msg.end() || !type_it->is_string()) throw BadMessage("message needs a string \"type\"");
        const std::string type = *type_it;

        if (type == "frame") return feed(out, parse_frame(msg));
        if (type == "stroke") return stroke(out, msg);
        if (type == "confirm_touch") return on_event(out, hfsm::ConfirmTouch{});
        if (type == "arm_touch") return on_event(out, hfsm::ArmTouch{});
        if (type == "double_tap") return on_event(out, hfsm::DoubleTap{});
        if (type == "motion_complete") return on_event(out, hfsm::MotionComplete{});
        if (type == "reset") return reset(out);
        throw BadMessage("unknown message type: " + type);
    }

    static double number(const nlohmann::json& v, const char* what) {
        if (!v.is_number()) throw BadMessage(std::string(what) + " must be a number");
        return v.get<double>();
    }

    StreamFrame parse_frame(const nlohmann::json& msg) {
        StreamFrame f;
        f.t = msg.contains("t") ? number(msg["t"], "t") : next_t();
        auto w = msg.find("wrench");
        if (w == msg.end() || !w->is_array() || w->size() != kWrenchChannels)
            throw BadMessage("frame needs \"wrench\": [fx, fy, fz, mx, my, mz]");
        for (std::size_t c = 0; c < kWrenchChannels; ++c) f.wrench[c] = number((*w)[c], "wrench value");
        if (auto tq = msg.find("torque"); tq != msg.end() && !tq->is_null()) {
            if (!tq->is_array() || tq->size() != kJoints) throw BadMessage("\"torque\" must hold 7 values");
            TorqueSample s;
            for (std::size_t j = 0; j < kJoints; ++j) s[j] = number((*tq)[j], "torque value");
            f.torque = s;
        }
        return f;
    }

    double next_t() const { return last_t_ + 1.0 / cfg_.synth.sample_rate_hz; }

    void feed(Output& out, const StreamFrame& f) {
        last_t_ = f.t;
        const auto ev = classifier_.push_frame(f);
        if (!ev) return;
        if (ev->kind == RecognitionEvent::Kind::TouchStarted) {
            emit(out, {{"type", "touch_started"}, {"onset_frame", ev->onset_frame}});
            return on_event(out, hfsm::TouchStart{});
        }
        const Prediction& p = *ev->prediction;
        emit(out, {{"type", "prediction"},
                   {"kind", kind_name(ev->kind)},
                   {"label", p.label},
                   {"confidence", p.confidence},
                   {"probabilities", p.probabilities},
                   {"onset_frame", ev->onset_frame},
                   {"degenerate", ev->degenerate}});
        if (ev->kind == RecognitionEvent::Kind::Digit)
            on_event(out, hfsm::Digit{p.label, p.confidence});
        else
            on_event(out, hfsm::LowConfidence{});
    }

    /// Maps a pointer path to wrenches and streams it, framed by enough
    /// resting frames to warm the baseline and to close the capture window.
    void stroke(Output& out, const nlohmann::json& msg) {
        auto pts = msg.find("points");
        if (pts == msg.end() || !pts->is_array()) throw BadMessage("stroke needs \"points\": [{x, y, t}, ...]");
        std::vector<StrokeSample> path;
        for (const auto& p : *pts) {
            if (!p.is_object() || !p.contains("x") || !p.contains("y") || !p.contains("t"))
                throw BadMessage("stroke point needs x, y, t");
            path.push_back({number(p["x"], "x"), number(p["y"], "y"), number(p["t"], "t")});
        }
        const SynthTrace trace = stroke_to_trace(path, cfg_.synth);

        auto rest = [&] {
            StreamFrame f;
            f.t = next_t();
            f.wrench = classifier_.baseline().baseline();
            return f;
        };
        while (classifier_.phase() == StreamClassifier::Phase::Idle &&
               classifier_.baseline().buffered() < cfg_.online.baseline_window)
            feed(out, rest());
        const WrenchSample offset = classifier_.baseline().baseline();
        for (const auto& tf : trace.frames) {
            StreamFrame f;
            f.t = next_t();
            for (std::size_t c = 0; c < kWrenchChannels; ++c) f.wrench[c] = tf.wrench[c] + offset[c];
            feed(out, f);
        }
        for (std::size_t i = 0; i < cfg_.online.capture_window && classifier_.phase() == StreamClassifier::Phase::Capturing; ++i)
            feed(out, rest());
    }

    void reset(Output& out) {
        classifier_.reset();
        for (const auto& [t, g] : armed_) out.timers.push_back({t, g, std::nullopt});
        armed_.clear();
        state_ = hfsm::Idle{};
        last_t_ = 0;
        emit_state(out);
    }

    void on_event(Output& out, const hfsm::Event& e) {
        hfsm::StepResult r = hfsm::step(state_, e, cfg_.tasks, cfg_.hfsm);
        const bool changed = !(r.state == state_);
        state_ = std::move(r.state);
        if (changed) emit_state(out);
        for (const auto& a : r.actions) apply(out, a);
    }

    void apply(Output& out, const hfsm::Action& a) {
        auto timer_of = [](hfsm::TimerId id) {
            return id == hfsm::TimerId::Confirm ? SessionTimer::Confirm : SessionTimer::DoubleTap;
        };
        if (const auto* s = std::get_if<hfsm::Speak>(&a)) {
            emit(out, {{"type", "action"}, {"action", "speak"}, {"text", s->text}});
        } else if (const auto* m = std::get_if<hfsm::StartMotion>(&a)) {
            emit(out, {{"type", "action"}, {"action", "start_motion"}, {"task", hfsm::to_json(m->task)}});
            if (cfg_.motion_duration_s > 0) arm(out, SessionTimer::Motion, cfg_.motion_duration_s);
        } else if (std::holds_alternative<hfsm::StopMotion>(a)) {
            emit(out, {{"type", "action"}, {"action", "stop_motion"}});
            cancel(out, SessionTimer::Motion);
        } else if (std::holds_alternative<hfsm::ResumeMotion>(a)) {
            emit(out, {{"type", "action"}, {"action", "resume_motion"}});
            if (cfg_.motion_duration_s > 0) arm(out, SessionTimer::Motion, cfg_.motion_duration_s);
        } else if (const auto* t = std::get_if<hfsm::ArmTimer>(&a)) {
            arm(out, timer_of(t->timer), t->duration_s);
        } else if (const auto* c = std::get_if<hfsm::CancelTimer>(&a)) {
            cancel(out, timer_of(c->timer));
        }
    }

    void arm(Output& out, SessionTimer t, double seconds) {
        armed_[t] = ++generation_;
        out.timers.push_back({t, generation_, seconds});
    }

    void cancel(Output& out, SessionTimer t) {
        auto it = armed_.find(t);
        if (it == armed_.end()) return;
        out.timers.push_back({t, it->second, std::nullopt});
        armed_.erase(it);
    }

    void emit_state(Output& out) {
        nlohmann::json j = hfsm::to_json(state_);
        j["type"] = "hfsm_state";
        emit(out, std::move(j));
    }

    void error(Output& out, const std::string& what) { emit(out, {{"type", "error"}, {"message", what}}); }

    void emit(Output& out, nlohmann::json msg) {
        msg["seq"] = ++seq_;
        out.messages.push_back(std::move(msg));
    }

    GlobalConfig cfg_;
    StreamClassifier classifier_;
    hfsm::State state_ = hfsm::Idle{};
    std::map<SessionTimer, std::uint64_t> armed_;
    std::uint64_t generation_ = 0;
    std::uint64_t seq_ = 0;
    double last_t_ = 0;
};

}  // namespace tactile::gateway
