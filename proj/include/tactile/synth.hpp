#pragma once

// Synthetic stand-in for recorded drawings. A finger sliding along a stroke
// template presses with a smooth normal force fz, drags the pad with Coulomb
// friction along its direction of travel, and loads the flange with the moment
// of that contact force about the pad center.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tactile/dataset.hpp"
#include "tactile/error.hpp"
#include "tactile/signal.hpp"

namespace tactile {

inline constexpr double kPadSizeMm = 120.0;

struct PadPoint {
    double x = 0;  // mm, pad frame, origin at lower-left corner
    double y = 0;
    friend bool operator==(const PadPoint&, const PadPoint&) = default;
};

struct StrokeTemplate {
    int digit = 0;
    std::vector<PadPoint> polyline;
    double duration_s = 2.0;

    /// The same glyph traced end to start.
    StrokeTemplate reversed() const {
        StrokeTemplate t = *this;
        std::reverse(t.polyline.begin(), t.polyline.end());
        return t;
    }

    /// The glyph rotated about the pad center by `degrees` (counterclockwise).
    StrokeTemplate rotated(double degrees) const {
        StrokeTemplate t = *this;
        const double a = degrees * std::numbers::pi / 180.0;
        const double c = std::cos(a), s = std::sin(a), h = kPadSizeMm / 2;
        for (auto& p : t.polyline) {
            const double x = p.x - h, y = p.y - h;
            p = {h + c * x - s * y, h + s * x + c * y};
        }
        return t;
    }
};

using TemplateSet = std::array<StrokeTemplate, 10>;

/// Built-in copy of data/stroke_templates.json.
inline constexpr const char* kDefaultTemplatesJson = R"json({"pad_mm":[120,120],"duration_s":2.0,"templates":[{"digit":0,"points":[[60.0,100.0],[52.75,98.64],[46.0,94.64],[40.2,88.28],[35.75,80.0],[32.95,70.35],[32.0,60.0],[32.95,49.65],[35.75,40.0],[40.2,31.72],[46.0,25.36],[52.75,21.36],[60.0,20.0],[67.25,21.36],[74.0,25.36],[79.8,31.72],[84.25,40.0],[87.05,49.65],[88.0,60.0],[87.05,70.35],[84.25,80.0],[79.8,88.28],[74.0,94.64],[67.25,98.64],[60.0,100.0]]},{"digit":1,"points":[[44,84],[60,100],[60,20]]},{"digit":2,"points":[[36.51,84.55],[39.84,90.78],[44.78,95.83],[50.94,99.3],[57.82,100.9],[64.88,100.52],[71.54,98.18],[77.29,94.06],[81.65,88.5],[84.28,81.94],[84.98,74.91],[83.67,67.96],[80.48,61.66],[30,20],[92,20]]},{"digit":3,"points":[[40.68,90.0],[45.14,95.32],[51.16,98.79],[58.0,100.0],[64.84,98.79],[70.86,95.32],[75.32,90.0],[77.7,83.47],[77.7,76.53],[75.32,70.0],[70.86,64.68],[64.84,61.21],[58.0,60.0],[64.84,58.79],[70.86,55.32],[75.32,50.0],[77.7,43.47],[77.7,36.53],[75.32,30.0],[70.86,24.68],[64.84,21.21],[58.0,20.0],[51.16,21.21],[45.14,24.68],[40.68,30.0]]},{"digit":4,"points":[[72,20],[72,100],[28,46],[92,46]]},{"digit":5,"points":[[86,100],[42,100],[38,64],[44.23,63.66],[51.5,67.1],[59.5,67.95],[67.32,66.12],[74.1,61.8],[79.08,55.48],[81.69,47.87],[81.64,39.83],[78.93,32.26],[73.88,26.01],[67.05,21.77],[59.2,20.03],[51.21,20.98],[43.99,24.51],[38.34,30.23]]},{"digit":6,"points":[[82,98],[60,92],[44,78],[37,60],[37.0,40.0],[38.08,33.2],[41.2,27.07],[46.07,22.2],[52.2,19.08],[59.0,18.0],[65.8,19.08],[71.93,22.2],[76.8,27.07],[79.92,33.2],[81.0,40.0],[79.92,46.8],[76.8,52.93],[71.93,57.8],[65.8,60.92],[59.0,62.0],[52.2,60.92],[46.07,57.8],[41.2,52.93],[38.08,46.8],[37.0,40.0]]},{"digit":7,"points":[[30,100],[90,100],[50,20]]},{"digit":8,"points":[[60.0,98.0],[51.32,97.05],[44.36,94.24],[40.5,89.71],[40.5,83.69],[44.36,76.49],[51.32,68.46],[60.0,60.0],[68.68,51.54],[75.64,43.51],[79.5,36.31],[79.5,30.29],[75.64,25.76],[68.68,22.95],[60.0,22.0],[51.32,22.95],[44.36,25.76],[40.5,30.29],[40.5,36.31],[44.36,43.51],[51.32,51.54],[60.0,60.0],[68.68,68.46],[75.64,76.49],[79.5,83.69],[79.5,89.71],[75.64,94.24],[68.68,97.05],[60.0,98.0]]},{"digit":9,"points":[[82.0,76.0],[80.92,82.8],[77.8,88.93],[72.93,93.8],[66.8,96.92],[60.0,98.0],[53.2,96.92],[47.07,93.8],[42.2,88.93],[39.08,82.8],[38.0,76.0],[39.08,69.2],[42.2,63.07],[47.07,58.2],[53.2,55.08],[60.0,54.0],[66.8,55.08],[72.93,58.2],[77.8,63.07],[80.92,69.2],[82.0,76.0],[82,20]]}]})json";

inline TemplateSet parse_templates(const nlohmann::json& doc) {
    TemplateSet set;
    std::array<bool, 10> seen{};
    const double duration = doc.value("duration_s", 2.0);
    for (const auto& t : doc.at("templates")) {
        const int d = t.at("digit").get<int>();
        if (d < 0 || d > 9) throw ConfigError("template digit out of range: " + std::to_string(d));
        StrokeTemplate st;
        st.digit = d;
        st.duration_s = t.value("duration_s", duration);
        for (const auto& p : t.at("points")) {
            PadPoint pt{p.at(0).get<double>(), p.at(1).get<double>()};
            if (pt.x < 0 || pt.x > kPadSizeMm || pt.y < 0 || pt.y > kPadSizeMm)
                throw ConfigError("template " + std::to_string(d) + " leaves the pad");
            st.polyline.push_back(pt);
        }
        if (st.polyline.size() < 2) throw ConfigError("template " + std::to_string(d) + " needs >= 2 points");
        if (st.duration_s <= 0) throw ConfigError("template duration must be positive");
        set[static_cast<std::size_t>(d)] = std::move(st);
        seen[static_cast<std::size_t>(d)] = true;
    }
    for (int d = 0; d < 10; ++d)
        if (!seen[static_cast<std::size_t>(d)]) throw ConfigError("missing template for digit " + std::to_string(d));
    return set;
}

inline const TemplateSet& default_templates() {
    static const TemplateSet set = parse_templates(nlohmann::json::parse(kDefaultTemplatesJson));
    return set;
}

inline TemplateSet load_templates(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open template file " + file.string());
    try {
        return parse_templates(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
}

/// Per-sequence generator parameters. Jitter terms are relative standard
/// deviations unless noted.
struct SynthParams {
    double sample_rate_hz = 100.0;
    double duration_s = 2.0;
    double duration_jitter = 0.10;
    double timing_jitter = 0.15;  // amplitude of the monotone speed warp
    double path_jitter_mm = 2.0;  // per-vertex displacement
    double pressure_mean = 1.5;   // N
    double pressure_sd = 0.2;
    double pressure_min = 1.0;
    double pressure_max = 2.0;
    double pressure_wobble = 0.05;  // slow relative fz modulation during the plateau
    double ramp_fraction = 0.06;    // share of the stroke spent pressing / releasing
    double friction = 0.3;
    double contact_height_m = 0.0;  // z of the contact point above the flange
    double force_noise = 0.01;      // N
    double mz_noise = 0.002;        // Nm
    TouchThresholds thresholds{};

    /// All jitter and noise off: the output is a pure function of the path.
    static SynthParams noiseless() {
        SynthParams p;
        p.duration_jitter = p.timing_jitter = p.path_jitter_mm = 0.0;
        p.pressure_sd = p.pressure_wobble = p.force_noise = p.mz_noise = 0.0;
        return p;
    }
};

/// Raw generator output before segmentation, with the quantities needed to
/// audit it.
struct SynthTrace {
    std::vector<StreamFrame> frames;
    std::vector<std::array<double, 3>> contact_offsets;  // m, from the pad center
    std::vector<double> mz_noise;
    double plateau_force = 0;
    /// Frames above the touch threshold.
    TouchSpan touch;
};

namespace detail {

/// Position at arc-length fraction `s` in [0, 1] along the polyline.
inline PadPoint along(const std::vector<PadPoint>& poly, const std::vector<double>& cum, double s) {
    const double target = std::clamp(s, 0.0, 1.0) * cum.back();
    auto it = std::upper_bound(cum.begin(), cum.end(), target);
    std::size_t i = it == cum.begin() ? 0 : static_cast<std::size_t>(it - cum.begin()) - 1;
    if (i >= poly.size() - 1) return poly.back();
    const double seg = cum[i + 1] - cum[i];
    const double f = seg > 0 ? (target - cum[i]) / seg : 0.0;
    return {poly[i].x + f * (poly[i + 1].x - poly[i].x), poly[i].y + f * (poly[i + 1].y - poly[i].y)};
}

inline double press_profile(double u, double ramp) {
    if (ramp <= 0) return 1.0;
    if (u < ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * u / ramp);
    if (u > 1.0 - ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * (1.0 - u) / ramp);
    return 1.0;
}

}  // namespace detail

/// Converts finger positions sampled at uniform frame times into wrenches.
///
/// `pressure[k]` is the normal force at frame k. Friction acts along the unit
/// direction of travel (central differences, one-sided at the ends); the moment
/// is cross(r, F) with r the contact offset from the pad center.
template <typename Rng>
SynthTrace wrench_from_path(const std::vector<PadPoint>& pos, const std::vector<double>& pressure,
                            const SynthParams& p, Rng& rng) {
    const std::size_t n = pos.size();
    if (n < 2 || pressure.size() != n) throw InvalidSequenceError("path needs >= 2 samples with pressures");
    std::normal_distribution<double> unit(0.0, 1.0);

    SynthTrace tr;
    tr.frames.resize(n);
    tr.contact_offsets.resize(n);
    tr.mz_noise.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const PadPoint& a = pos[k == 0 ? 0 : k - 1];
        const PadPoint& b = pos[k + 1 == n ? n - 1 : k + 1];
        double vx = b.x - a.x, vy = b.y - a.y;
        const double speed = std::hypot(vx, vy);
        if (speed > 0) {
            vx /= speed;
            vy /= speed;
        } else {
            vx = vy = 0;
        }

        WrenchSample w;
        w.fz = pressure[k];
        w.fx = p.friction * w.fz * vx;
        w.fy = p.friction * w.fz * vy;
        if (p.force_noise > 0) {
            w.fx += p.force_noise * unit(rng);
            w.fy += p.force_noise * unit(rng);
            w.fz += p.force_noise * unit(rng);
        }
        const std::array<double, 3> r{(pos[k].x - kPadSizeMm / 2) / 1000.0,
                                      (pos[k].y - kPadSizeMm / 2) / 1000.0, p.contact_height_m};
        const double noise = p.mz_noise > 0 ? p.mz_noise * unit(rng) : 0.0;
        w.mx = r[1] * w.fz - r[2] * w.fy;
        w.my = r[2] * w.fx - r[0] * w.fz;
        w.mz = r[0] * w.fy - r[1] * w.fx + noise;

        tr.frames[k].t = static_cast<double>(k) / p.sample_rate_hz;
        tr.frames[k].wrench = w;
        tr.contact_offsets[k] = r;
        tr.mz_noise[k] = noise;
    }

    std::size_t first = n, last = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (is_touch(tr.frames[k], p.thresholds)) {
            first = std::min(first, k);
            last = k;
        }
    }
    tr.touch = first < n ? TouchSpan{first, last + 1} : TouchSpan{};
    return tr;
}

/// Traces `tmpl` at uniform speed (up to the timing warp) and records the
/// resulting raw wrench stream, starting and ending at zero contact force.
template <typename Rng>
SynthTrace synthesize_trace(const StrokeTemplate& tmpl, Rng& rng, const SynthParams& p = {}) {
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    std::vector<PadPoint> poly = tmpl.polyline;
    if (p.path_jitter_mm > 0)
        for (auto& pt : poly) {
            pt.x = std::clamp(pt.x + p.path_jitter_mm * unit(rng), 0.0, kPadSizeMm);
            pt.y = std::clamp(pt.y + p.path_jitter_mm * unit(rng), 0.0, kPadSizeMm);
        }
    std::vector<double> cum(poly.size(), 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i)
        cum[i] = cum[i - 1] + std::hypot(poly[i].x - poly[i - 1].x, poly[i].y - poly[i - 1].y);
    if (cum.back() <= 0) throw InvalidSequenceError("template has zero length");

    double duration = tmpl.duration_s * p.duration_s / 2.0;
    if (p.duration_jitter > 0) duration *= std::clamp(1.0 + p.duration_jitter * unit(rng), 0.5, 1.5);
    const auto n = static_cast<std::size_t>(std::max(3.0, std::round(duration * p.sample_rate_hz))) + 1;

    // Monotone warp s(u) = u + a sin(2 pi u) / (2 pi) with |a| < 1.
    const double warp = p.timing_jitter > 0 ? p.timing_jitter * uni(rng) : 0.0;
    double plateau = p.pressure_mean + (p.pressure_sd > 0 ? p.pressure_sd * unit(rng) : 0.0);
    plateau = std::clamp(plateau, p.pressure_min, p.pressure_max);
    const double wobble_phase = p.pressure_wobble > 0 ? std::numbers::pi * uni(rng) : 0.0;

    std::vector<PadPoint> pos(n);
    std::vector<double> pressure(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(n - 1);
        const double s = u + warp * std::sin(2 * std::numbers::pi * u) / (2 * std::numbers::pi);
        pos[k] = detail::along(poly, cum, s);
        double f = plateau * (1.0 + p.pressure_wobble * std::sin(3 * std::numbers::pi * u + wobble_phase));
        f = std::clamp(f, p.pressure_min, p.pressure_max);
        pressure[k] = f * detail::press_profile(u, p.ramp_fraction);
    }

    SynthTrace tr = wrench_from_path(pos, pressure, p, rng);
    tr.plateau_force = plateau;
    return tr;
}

/// The above-threshold part of a trace, resampled to canonical length.
inline TouchSequence canonicalize(const SynthTrace& tr, int digit) {
    if (tr.touch.size() < 2) throw EmptyTouchError("synthesized stroke never crossed the touch threshold");
    TouchSequence seq;
    for (std::size_t k = tr.touch.begin; k < tr.touch.end; ++k) seq.frames.push_back(tr.frames[k].wrench);
    seq.label = digit;
    return resample(seq);
}

/// One labeled canonical sequence for `digit`, drawn per its template.
template <typename Rng>
TouchSequence synthesize(int digit, Rng& rng, const SynthParams& p = {},
                         const TemplateSet& templates = default_templates()) {
    if (digit < 0 || digit > 9) throw Error("digit out of range: " + std::to_string(digit));
    return canonicalize(synthesize_trace(templates[static_cast<std::size_t>(digit)], rng, p), digit);
}

/// A raw recording of several drawn digits separated by rest periods.
struct SynthStream {
    std::vector<StreamFrame> frames;
    std::vector<int> digits;
    std::vector<TouchSpan> touches;  // above-threshold span of each drawing
};

/// Rest (`gap` frames of sensor noise around `offset`) before, between and
/// after the drawings of `digits`.
template <typename Rng>
SynthStream synthesize_stream(const std::vector<int>& digits, Rng& rng, const SynthParams& p = {},
                              std::size_t gap = 300, const WrenchSample& offset = {},
                              const TemplateSet& templates = default_templates()) {
    std::normal_distribution<double> unit(0.0, 1.0);
    SynthStream out;
    auto push = [&](WrenchSample w) {
        for (std::size_t c = 0; c < kWrenchChannels; ++c) w[c] += offset[c];
        StreamFrame f;
        f.t = static_cast<double>(out.frames.size()) / p.sample_rate_hz;
        f.wrench = w;
        out.frames.push_back(f);
    };
    auto rest = [&] {
        for (std::size_t i = 0; i < gap; ++i) {
            WrenchSample w;
            if (p.force_noise > 0)
                for (std::size_t c = 0; c < 3; ++c) w[c] = p.force_noise * unit(rng);
            push(w);
        }
    };
    rest();
    for (int d : digits) {
        if (d < 0 || d > 9) throw Error("digit out of range: " + std::to_string(d));
        const SynthTrace tr = synthesize_trace(templates[static_cast<std::size_t>(d)], rng, p);
        const std::size_t base = out.frames.size();
        for (const auto& f : tr.frames) push(f.wrench);
        out.digits.push_back(d);
        out.touches.push_back({base + tr.touch.begin, base + tr.touch.end});
        rest();
    }
    return out;
}

/// Drawing habits that stay fixed for one simulated user.
struct UserStyle {
    double pressure_mean = 1.5;
    double speed = 1.0;  // duration multiplier
    double friction = 0.3;
};

template <typename Rng>
UserStyle draw_user_style(Rng& rng, const SynthParams& base = {}) {
    std::normal_distribution<double> pressure(base.pressure_mean, 0.12);
    std::uniform_real_distribution<double> speed(0.8, 1.2);
    std::uniform_real_distribution<double> mu(base.friction - 0.05, base.friction + 0.05);
    UserStyle u;
    u.pressure_mean = std::clamp(pressure(rng), base.pressure_min + 0.2, base.pressure_max - 0.2);
    u.speed = speed(rng);
    u.friction = mu(rng);
    return u;
}

/// `users` simulated users, each drawing every digit `per_class` times.
inline Dataset make_synthetic_dataset(std::size_t per_class, std::size_t users, std::uint64_t seed,
                                      const SynthParams& base = {},
                                      const TemplateSet& templates = default_templates()) {
    if (per_class == 0 || users == 0) throw Error("per_class and users must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<TouchSequence> seqs;
    seqs.reserve(per_class * users * 10);
    for (std::size_t u = 0; u < users; ++u) {
        const UserStyle style = draw_user_style(rng, base);
        SynthParams p = base;
        p.pressure_mean = style.pressure_mean;
        p.pressure_sd = base.pressure_sd * 0.7;
        p.duration_s = base.duration_s * style.speed;
        p.friction = style.friction;
        for (int d = 0; d < 10; ++d) {
            for (std::size_t k = 0; k < per_class; ++k) {
                TouchSequence s = synthesize(d, rng, p, templates);
                s.meta.user_id = "user" + std::to_string(u + 1);
                seqs.push_back(std::move(s));
            }
        }
    }
    return Dataset(std::move(seqs));
}

/// Pointer sample from a drawing surface.
struct StrokeSample {
    double x_mm = 0;
    double y_mm = 0;
    double t_ms = 0;
};

/// Turns a recorded pointer path into a raw wrench stream at
/// `p.sample_rate_hz`, pressing with `p.pressure_mean` and no jitter.
inline SynthTrace stroke_to_trace(const std::vector<StrokeSample>& path, const SynthParams& p = {}) {
    if (path.size() < 2) throw InvalidSequenceError("stroke needs at least 2 samples");
    for (std::size_t i = 1; i < path.size(); ++i)
        if (!(path[i].t_ms > path[i - 1].t_ms)) throw InvalidSequenceError("stroke timestamps must increase");
    const double t0 = path.front().t_ms, t1 = path.back().t_ms;
    const double dt_ms = 1000.0 / p.sample_rate_hz;
    const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / dt_ms)) + 1;
    if (n < 3) throw InvalidSequenceError("stroke too short");

    std::vector<PadPoint> pos(n);
    std::vector<double> pressure(n);
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t0 + static_cast<double>(k) * dt_ms;
        while (j + 2 < path.size() && path[j + 1].t_ms < t) ++j;
        const auto& a = path[j];
        const auto& b = path[j + 1];
        const double f = std::clamp((t - a.t_ms) / (b.t_ms - a.t_ms), 0.0, 1.0);
        pos[k] = {std::clamp(a.x_mm + f * (b.x_mm - a.x_mm), 0.0, kPadSizeMm),
                  std::clamp(a.y_mm + f * (b.y_mm - a.y_mm), 0.0, kPadSizeMm)};
        const double u = static_cast<double>(k) / static_cast<double>(n - 1);
        pressure[k] = p.pressure_mean * detail::press_profile(u, p.ramp_fraction);
    }
    std::mt19937_64 unused(0);
    SynthParams quiet = p;
    quiet.force_noise = quiet.mz_noise = 0.0;
    SynthTrace tr = wrench_from_path(pos, pressure, quiet, unused);
    tr.plateau_force = p.pressure_mean;
    return tr;
}

/// Uniform-speed pointer path along a template, for scripted clients.
inline std::vector<StrokeSample> template_stroke(const StrokeTemplate& tmpl, double sample_rate_hz = 60.0) {
    std::vector<double> cum(tmpl.polyline.size(), 0.0);
    for (std::size_t i = 1; i < tmpl.polyline.size(); ++i)
        cum[i] = cum[i - 1] + std::hypot(tmpl.polyline[i].x - tmpl.polyline[i - 1].x,
                                         tmpl.polyline[i].y - tmpl.polyline[i - 1].y);
    const auto n = static_cast<std::size_t>(std::round(tmpl.duration_s * sample_rate_hz)) + 1;
    std::vector<StrokeSample> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(n - 1);
        const PadPoint pt = detail::along(tmpl.polyline, cum, u);
        out[k] = {pt.x, pt.y, 1000.0 * tmpl.duration_s * u};
    }
    return out;
}

}  // namespace tactile
