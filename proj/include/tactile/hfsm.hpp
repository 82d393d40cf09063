#pragma once

// Task-execution state machine driven by recognition and touch events.
//
//   Idle --TouchStart--> DetectingDigit
//   DetectingDigit --Digit(conf >= thr)--> AwaitingConfirmation   [Speak, ArmTimer(confirm)]
//   DetectingDigit --Digit(conf < thr) | LowConfidence--> Idle     [Speak(redraw)]
//   DetectingDigit --Timeout--> Idle                               [Speak(redraw)]
//   AwaitingConfirmation --ConfirmTouch--> Motion                  [CancelTimer, StartMotion]
//                        (digit without a task)       --> Idle     [CancelTimer, Speak(unknown)]
//   AwaitingConfirmation --Timeout(confirm)--> Idle
//   Motion --ArmTouch--> Stopped                                   [StopMotion, ArmTimer(double_tap)]
//   Motion --MotionComplete--> Idle
//   Stopped --DoubleTap--> Motion                                  [CancelTimer, ResumeMotion]
//   Stopped --Timeout(double_tap)--> Idle
//
// Every other (state, event) pair leaves the state unchanged and emits nothing.
// Timers are owned by the caller, which turns ArmTimer actions into Timeout
// events later.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tactile/error.hpp"

namespace tactile::hfsm {

enum class TimerId { Confirm, DoubleTap };

inline const char* timer_name(TimerId id) { return id == TimerId::Confirm ? "confirm" : "double_tap"; }

struct Task {
    std::string name;
    std::string motion_id;
    friend bool operator==(const Task&, const Task&) = default;
};

/// Digit -> task. Digits without an entry are rejected at confirmation.
class TaskRegistry {
public:
    TaskRegistry() = default;
    explicit TaskRegistry(std::map<int, Task> tasks) {
        for (auto& [d, t] : tasks) add(d, std::move(t));
    }

    void add(int digit, Task task) {
        if (digit < 0 || digit > 9) throw ConfigError("task registry key out of range: " + std::to_string(digit));
        tasks_[digit] = std::move(task);
    }

    const Task* find(int digit) const {
        auto it = tasks_.find(digit);
        return it == tasks_.end() ? nullptr : &it->second;
    }
    const std::map<int, Task>& tasks() const { return tasks_; }

    /// The fruit-delivery assignment: 1 apple, 2 orange, 3 lemon.
    static TaskRegistry fruit_delivery() {
        return TaskRegistry({{1, {"apple", "deliver_apple"}},
                             {2, {"orange", "deliver_orange"}},
                             {3, {"lemon", "deliver_lemon"}}});
    }

private:
    std::map<int, Task> tasks_;
};

struct Config {
    double confidence_threshold = 0.80;
    double confirm_timeout_s = 5.0;
    double double_tap_window_s = 2.0;
};

// States ---------------------------------------------------------------------

struct Idle {
    friend bool operator==(const Idle&, const Idle&) = default;
};
struct DetectingDigit {
    friend bool operator==(const DetectingDigit&, const DetectingDigit&) = default;
};
struct AwaitingConfirmation {
    int label = 0;
    double confirm_timeout_s = 0;
    friend bool operator==(const AwaitingConfirmation&, const AwaitingConfirmation&) = default;
};
struct Motion {
    Task task;
    friend bool operator==(const Motion&, const Motion&) = default;
};
struct Stopped {
    Task task;
    double double_tap_window_s = 0;
    friend bool operator==(const Stopped&, const Stopped&) = default;
};

using State = std::variant<Idle, DetectingDigit, AwaitingConfirmation, Motion, Stopped>;

inline const char* state_name(const State& s) {
    static constexpr const char* names[] = {"Idle", "DetectingDigit", "AwaitingConfirmation", "Motion", "Stopped"};
    return names[s.index()];
}

// Events ---------------------------------------------------------------------

struct TouchStart {};
struct Digit {
    int label = 0;
    double confidence = 0;
};
struct LowConfidence {};
struct ConfirmTouch {};
struct Timeout {
    TimerId timer = TimerId::Confirm;
};
struct MotionComplete {};
struct ArmTouch {};
struct DoubleTap {};

using Event = std::variant<TouchStart, Digit, LowConfidence, ConfirmTouch, Timeout, MotionComplete, ArmTouch, DoubleTap>;

inline const char* event_name(const Event& e) {
    static constexpr const char* names[] = {"TouchStart", "Digit",    "LowConfidence", "ConfirmTouch",
                                            "Timeout",    "MotionComplete", "ArmTouch", "DoubleTap"};
    return names[e.index()];
}

// Actions --------------------------------------------------------------------

struct Speak {
    std::string text;
    friend bool operator==(const Speak&, const Speak&) = default;
};
struct StartMotion {
    Task task;
    friend bool operator==(const StartMotion&, const StartMotion&) = default;
};
struct StopMotion {
    friend bool operator==(const StopMotion&, const StopMotion&) = default;
};
struct ResumeMotion {
    friend bool operator==(const ResumeMotion&, const ResumeMotion&) = default;
};
struct ArmTimer {
    TimerId timer = TimerId::Confirm;
    double duration_s = 0;
    friend bool operator==(const ArmTimer&, const ArmTimer&) = default;
};
struct CancelTimer {
    TimerId timer = TimerId::Confirm;
    friend bool operator==(const CancelTimer&, const CancelTimer&) = default;
};

using Action = std::variant<Speak, StartMotion, StopMotion, ResumeMotion, ArmTimer, CancelTimer>;

inline const char* action_name(const Action& a) {
    static constexpr const char* names[] = {"Speak", "StartMotion", "StopMotion", "ResumeMotion", "ArmTimer",
                                            "CancelTimer"};
    return names[a.index()];
}

// Spoken feedback --------------------------------------------------------------

struct RecognizedCommand {
    int digit = 0;
    const Task* task = nullptr;
};
struct RedrawPrompt {};
struct UnknownCommand {
    int digit = 0;
};
using SpeechContext = std::variant<RecognizedCommand, RedrawPrompt, UnknownCommand>;

inline std::string spoken_text(const SpeechContext& ctx) {
    struct {
        std::string operator()(const RecognizedCommand& c) const {
            std::string s = "I recognized digit " + std::to_string(c.digit);
            if (c.task) s += ", " + c.task->name;
            return s + ". Touch the robot to confirm.";
        }
        std::string operator()(const RedrawPrompt&) const {
            return "I could not recognize the digit. Please draw it again.";
        }
        std::string operator()(const UnknownCommand& c) const {
            return "Digit " + std::to_string(c.digit) + " is not assigned to any task.";
        }
    } render;
    return std::visit(render, ctx);
}

// Transition function ----------------------------------------------------------

struct StepResult {
    State state;
    std::vector<Action> actions;
};

inline StepResult step(const State& state, const Event& event, const TaskRegistry& registry, const Config& cfg) {
    StepResult same{state, {}};
    auto redraw = [] { return Speak{spoken_text(RedrawPrompt{})}; };

    if (std::holds_alternative<Idle>(state)) {
        if (std::holds_alternative<TouchStart>(event)) return {DetectingDigit{}, {}};
        return same;
    }

    if (std::holds_alternative<DetectingDigit>(state)) {
        if (const auto* d = std::get_if<Digit>(&event)) {
            if (d->confidence >= cfg.confidence_threshold)
                return {AwaitingConfirmation{d->label, cfg.confirm_timeout_s},
                        {Speak{spoken_text(RecognizedCommand{d->label, registry.find(d->label)})},
                         ArmTimer{TimerId::Confirm, cfg.confirm_timeout_s}}};
            return {Idle{}, {redraw()}};
        }
        if (std::holds_alternative<LowConfidence>(event) || std::holds_alternative<Timeout>(event))
            return {Idle{}, {redraw()}};
        return same;
    }

    if (const auto* s = std::get_if<AwaitingConfirmation>(&state)) {
        if (std::holds_alternative<ConfirmTouch>(event)) {
            if (const Task* task = registry.find(s->label))
                return {Motion{*task}, {CancelTimer{TimerId::Confirm}, StartMotion{*task}}};
            return {Idle{}, {CancelTimer{TimerId::Confirm}, Speak{spoken_text(UnknownCommand{s->label})}}};
        }
        if (const auto* t = std::get_if<Timeout>(&event); t && t->timer == TimerId::Confirm) return {Idle{}, {}};
        return same;
    }

    if (const auto* s = std::get_if<Motion>(&state)) {
        if (std::holds_alternative<ArmTouch>(event))
            return {Stopped{s->task, cfg.double_tap_window_s},
                    {StopMotion{}, ArmTimer{TimerId::DoubleTap, cfg.double_tap_window_s}}};
        if (std::holds_alternative<MotionComplete>(event)) return {Idle{}, {}};
        return same;
    }

    const auto& s = std::get<Stopped>(state);
    if (std::holds_alternative<DoubleTap>(event))
        return {Motion{s.task}, {CancelTimer{TimerId::DoubleTap}, ResumeMotion{}}};
    if (const auto* t = std::get_if<Timeout>(&event); t && t->timer == TimerId::DoubleTap) return {Idle{}, {}};
    return same;
}

/// States after each event, starting with `initial` and its empty action list.
inline std::vector<StepResult> run_scenario(const State& initial, const std::vector<Event>& events,
                                            const TaskRegistry& registry, const Config& cfg) {
    std::vector<StepResult> trace{{initial, {}}};
    for (const auto& e : events) trace.push_back(step(trace.back().state, e, registry, cfg));
    return trace;
}

// JSON -------------------------------------------------------------------------

inline nlohmann::json to_json(const Task& t) { return {{"name", t.name}, {"motion_id", t.motion_id}}; }

inline nlohmann::json to_json(const State& s) {
    nlohmann::json j{{"state", state_name(s)}};
    if (const auto* a = std::get_if<AwaitingConfirmation>(&s)) {
        j["label"] = a->label;
        j["confirm_timeout_s"] = a->confirm_timeout_s;
    } else if (const auto* m = std::get_if<Motion>(&s)) {
        j["task"] = to_json(m->task);
    } else if (const auto* st = std::get_if<Stopped>(&s)) {
        j["task"] = to_json(st->task);
        j["double_tap_window_s"] = st->double_tap_window_s;
    }
    return j;
}

inline nlohmann::json to_json(const Action& a) {
    nlohmann::json j{{"action", action_name(a)}};
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Speak>) j["text"] = v.text;
            if constexpr (std::is_same_v<T, StartMotion>) j["task"] = to_json(v.task);
            if constexpr (std::is_same_v<T, ArmTimer>) {
                j["timer"] = timer_name(v.timer);
                j["duration_s"] = v.duration_s;
            }
            if constexpr (std::is_same_v<T, CancelTimer>) j["timer"] = timer_name(v.timer);
        },
        a);
    return j;
}

/// One JSON object per trace entry, newline-separated.
inline std::string trace_jsonl(const std::vector<StepResult>& trace) {
    std::string out;
    for (const auto& r : trace) {
        nlohmann::json j = to_json(r.state);
        j["actions"] = nlohmann::json::array();
        for (const auto& a : r.actions) j["actions"].push_back(to_json(a));
        out += j.dump() + '\n';
    }
    return out;
}

}  // namespace tactile::hfsm
