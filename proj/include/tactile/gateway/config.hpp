#pragma once

// Service configuration: one JSON file, every field optional.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "tactile/error.hpp"
#include "tactile/hfsm.hpp"
#include "tactile/online.hpp"
#include "tactile/synth.hpp"

namespace tactile::gateway {

struct GlobalConfig {
    OnlineConfig online{};
    hfsm::Config hfsm{};
    hfsm::TaskRegistry tasks = hfsm::TaskRegistry::fruit_delivery();
    std::string model_path = "model.bin";
    /// Kinematic mapping for stroke messages; noise is off so a stroke always
    /// yields the same wrench stream.
    SynthParams synth = SynthParams::noiseless();
    /// Simulated motion length; 0 disables automatic MotionComplete.
    double motion_duration_s = 5.0;
    std::string listen_address = "127.0.0.1";
    std::uint16_t port = 8765;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::string& where, std::set<std::string> known) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("unknown config key: " + where + "." + k);
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("bad type for config key " + where + "." + key);
    }
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace detail

/// Reads a configuration object over the defaults and validates it.
inline GlobalConfig parse_config(const nlohmann::json& j) {
    using detail::read;
    using detail::require;
    GlobalConfig c;
    detail::reject_unknown(j, "config", {"thresholds", "baseline_window", "capture_window", "confidence_threshold",
                                         "confirm_timeout_s", "double_tap_window_s", "motion_duration_s",
                                         "model_path", "tasks", "synth", "listen_address", "port"});
    if (j.contains("thresholds")) {
        const auto& t = j["thresholds"];
        detail::reject_unknown(t, "thresholds", {"force", "torque"});
        read(t, "force", c.online.thresholds.force, "thresholds");
        read(t, "torque", c.online.thresholds.torque, "thresholds");
    }
    auto read_count = [&](const char* key, std::size_t& out) {
        if (!j.contains(key)) return;
        require(j[key].is_number_integer(), std::string(key) + " must be an integer");
        long long v = -1;
        read(j, key, v, "config");
        require(v >= 0, std::string(key) + " must be a non-negative integer");
        out = static_cast<std::size_t>(v);
    };
    read_count("baseline_window", c.online.baseline_window);
    read_count("capture_window", c.online.capture_window);
    read(j, "confidence_threshold", c.online.confidence_threshold, "config");
    c.hfsm.confidence_threshold = c.online.confidence_threshold;
    read(j, "confirm_timeout_s", c.hfsm.confirm_timeout_s, "config");
    read(j, "double_tap_window_s", c.hfsm.double_tap_window_s, "config");
    read(j, "motion_duration_s", c.motion_duration_s, "config");
    read(j, "model_path", c.model_path, "config");
    read(j, "listen_address", c.listen_address, "config");
    if (j.contains("port")) {
        require(j["port"].is_number_integer(), "port must be an integer");
        int port = -1;
        read(j, "port", port, "config");
        require(port >= 0 && port <= 65535, "port out of range");
        c.port = static_cast<std::uint16_t>(port);
    }
    if (j.contains("tasks")) {
        const auto& t = j["tasks"];
        require(t.is_object(), "tasks must map digits to {name, motion_id}");
        hfsm::TaskRegistry reg;
        for (const auto& [key, v] : t.items()) {
            require(key.size() == 1 && key[0] >= '0' && key[0] <= '9', "task key must be a digit 0..9: " + key);
            detail::reject_unknown(v, "tasks." + key, {"name", "motion_id"});
            hfsm::Task task;
            read(v, "name", task.name, "tasks." + key);
            read(v, "motion_id", task.motion_id, "tasks." + key);
            require(!task.name.empty(), "task " + key + " needs a name");
            if (task.motion_id.empty()) task.motion_id = task.name;
            reg.add(key[0] - '0', task);
        }
        c.tasks = reg;
    }
    if (j.contains("synth")) {
        const auto& s = j["synth"];
        detail::reject_unknown(s, "synth", {"sample_rate_hz", "pressure_mean", "friction", "contact_height_m",
                                            "ramp_fraction"});
        read(s, "sample_rate_hz", c.synth.sample_rate_hz, "synth");
        read(s, "pressure_mean", c.synth.pressure_mean, "synth");
        read(s, "friction", c.synth.friction, "synth");
        read(s, "contact_height_m", c.synth.contact_height_m, "synth");
        read(s, "ramp_fraction", c.synth.ramp_fraction, "synth");
    }
    c.synth.thresholds = c.online.thresholds;

    auto positive = [](double v) { return std::isfinite(v) && v > 0; };
    require(positive(c.online.thresholds.force) && positive(c.online.thresholds.torque), "thresholds must be > 0");
    require(c.online.baseline_window >= 1, "baseline_window must be >= 1");
    require(c.online.capture_window >= 2, "capture_window must be >= 2");
    require(c.online.confidence_threshold >= 0 && c.online.confidence_threshold <= 1,
            "confidence_threshold must be in [0, 1]");
    require(positive(c.hfsm.confirm_timeout_s) && positive(c.hfsm.double_tap_window_s), "timeouts must be > 0");
    require(std::isfinite(c.motion_duration_s) && c.motion_duration_s >= 0, "motion_duration_s must be >= 0");
    require(positive(c.synth.sample_rate_hz) && positive(c.synth.pressure_mean), "synth rate and pressure must be > 0");
    require(c.synth.ramp_fraction > 0 && c.synth.ramp_fraction < 0.5, "synth.ramp_fraction must be in (0, 0.5)");
    require(!c.listen_address.empty(), "listen_address must not be empty");
    return c;
}

inline GlobalConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + file.string() + ": " + e.what());
    }
    return parse_config(j);
}

inline nlohmann::json to_json(const GlobalConfig& c) {
    nlohmann::json tasks = nlohmann::json::object();
    for (const auto& [d, t] : c.tasks.tasks()) tasks[std::to_string(d)] = hfsm::to_json(t);
    return {{"thresholds", {{"force", c.online.thresholds.force}, {"torque", c.online.thresholds.torque}}},
            {"baseline_window", c.online.baseline_window},
            {"capture_window", c.online.capture_window},
            {"confidence_threshold", c.online.confidence_threshold},
            {"confirm_timeout_s", c.hfsm.confirm_timeout_s},
            {"double_tap_window_s", c.hfsm.double_tap_window_s},
            {"motion_duration_s", c.motion_duration_s},
            {"model_path", c.model_path},
            {"tasks", tasks},
            {"synth",
             {{"sample_rate_hz", c.synth.sample_rate_hz},
              {"pressure_mean", c.synth.pressure_mean},
              {"friction", c.synth.friction},
              {"contact_height_m", c.synth.contact_height_m},
              {"ramp_fraction", c.synth.ramp_fraction}}},
            {"listen_address", c.listen_address},
            {"port", c.port}};
}

}  // namespace tactile::gateway
