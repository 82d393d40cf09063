#pragma once

// Physical-symmetry augmentation of wrench sequences: the same glyph traced
// backwards, or traced rotated about the pad normal.

#include <charconv>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "tactile/dataset.hpp"
#include "tactile/signal.hpp"

namespace tactile {

/// Angle about the end-effector z-axis in degrees, normalized to (-180, 180].
class RotationAngle {
public:
    constexpr RotationAngle() = default;
    explicit RotationAngle(double degrees) : deg_(normalize(degrees)) {}

    double degrees() const { return deg_; }
    double radians() const { return deg_ * std::numbers::pi / 180.0; }

    static double normalize(double degrees) {
        if (!std::isfinite(degrees)) throw Error("rotation angle must be finite");
        double r = std::fmod(degrees, 360.0);
        if (r <= -180.0) r += 360.0;
        if (r > 180.0) r -= 360.0;
        return r;
    }

private:
    double deg_ = 0.0;
};

/// Time reversal followed by the sign map (fx, fy, fz, mx, my, mz) ->
/// (-fx, -fy, fz, -mx, my, -mz). Joint torques have no such mapping and are
/// dropped from the copy.
inline TouchSequence reverse_digit(const TouchSequence& seq) {
    TouchSequence out = seq;
    out.torques.clear();
    const std::size_t n = seq.size();
    for (std::size_t i = 0; i < n; ++i) {
        const WrenchSample& w = seq.frames[n - 1 - i];
        out.frames[i] = {-w.fx, -w.fy, w.fz, -w.mx, w.my, -w.mz};
    }
    out.provenance = seq.provenance.origin == Origin::Reversed ? Provenance{}
                                                              : Provenance{Origin::Reversed, 0.0};
    return out;
}

/// Premultiplies the force and moment 3-vectors of every frame by R_z(theta).
inline TouchSequence rotate_digit(const TouchSequence& seq, RotationAngle theta) {
    TouchSequence out = seq;
    out.torques.clear();
    if (theta.degrees() == 0.0) return out;

    const double c = std::cos(theta.radians());
    const double s = std::sin(theta.radians());
    for (auto& w : out.frames) {
        const double fx = w.fx, fy = w.fy, mx = w.mx, my = w.my;
        w.fx = c * fx - s * fy;
        w.fy = s * fx + c * fy;
        w.mx = c * mx - s * my;
        w.my = s * mx + c * my;
    }
    const double base = seq.provenance.origin == Origin::Rotated ? seq.provenance.angle_deg : 0.0;
    out.provenance = {Origin::Rotated, RotationAngle(base + theta.degrees()).degrees()};
    return out;
}

struct ReversedMode {};
struct RotatedMode {
    std::vector<RotationAngle> angles;
};
using AugmentMode = std::variant<ReversedMode, RotatedMode>;

/// Parses "reversed", "rotated" (= +90,-90) or "rotated=<deg>,<deg>,...".
inline AugmentMode parse_augment_mode(std::string_view text) {
    if (text == "reversed") return ReversedMode{};
    if (text == "rotated") return RotatedMode{{RotationAngle(90), RotationAngle(-90)}};
    constexpr std::string_view prefix = "rotated=";
    if (text.substr(0, prefix.size()) != prefix) throw Error("unknown augmentation mode: " + std::string(text));
    RotatedMode mode;
    std::string_view rest = text.substr(prefix.size());
    while (true) {
        const auto comma = rest.find(',');
        std::string item(rest.substr(0, comma));
        if (!item.empty() && item[0] == '+') item.erase(0, 1);
        double deg = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), deg);
        if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size())
            throw Error("bad rotation angle in augmentation mode: " + std::string(text));
        mode.angles.emplace_back(deg);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return mode;
}

/// Originals followed by their augmented copies: one per original in reversed
/// mode, one per original per angle in rotated mode.
inline Dataset augment_dataset(const Dataset& ds, const AugmentMode& mode) {
    std::vector<TouchSequence> out(ds.begin(), ds.end());
    if (std::holds_alternative<ReversedMode>(mode)) {
        out.reserve(2 * ds.size());
        for (const auto& s : ds) out.push_back(reverse_digit(s));
    } else {
        const auto& angles = std::get<RotatedMode>(mode).angles;
        out.reserve(ds.size() * (1 + angles.size()));
        for (const auto& theta : angles)
            for (const auto& s : ds) out.push_back(rotate_digit(s, theta));
    }
    return Dataset(std::move(out));
}

}  // namespace tactile
