#pragma once

// Valence-Arousal coordinates, the 5x5 Self-Assessment Manikin grid and the
// text assets tied to it (level descriptions, matched greetings).

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace affectsim {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

enum class Dimension { valence, arousal };

inline constexpr std::string_view to_string(Dimension d) {
    return d == Dimension::valence ? "valence" : "arousal";
}

// A point in the unit VA square. Construction outside [0,1]^2 throws.
class VAPoint {
public:
    constexpr VAPoint() = default;
    VAPoint(double valence, double arousal) : valence_(valence), arousal_(arousal) {
        if (!in_unit(valence) || !in_unit(arousal)) {
            throw DomainError("VA point out of [0,1]^2: (" + std::to_string(valence) + ", " +
                              std::to_string(arousal) + ")");
        }
    }

    // Clamps each coordinate into [0,1]; NaN is still rejected.
    static VAPoint clamped(double valence, double arousal) {
        if (std::isnan(valence) || std::isnan(arousal)) throw DomainError("VA point is NaN");
        return {std::clamp(valence, 0.0, 1.0), std::clamp(arousal, 0.0, 1.0)};
    }

    constexpr double valence() const { return valence_; }
    constexpr double arousal() const { return arousal_; }
    constexpr double get(Dimension d) const { return d == Dimension::valence ? valence_ : arousal_; }

    friend constexpr bool operator==(const VAPoint&, const VAPoint&) = default;

private:
    static constexpr bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

    double valence_ = 0.5;
    double arousal_ = 0.5;
};

inline constexpr int kSamLevels = 5;

namespace detail {

inline constexpr std::array<std::string_view, kSamLevels> kValenceDesc{
    "Very negative (unpleasant)", "Negative (unsatisfied)", "Neutral", "Positive (pleased)",
    "Very positive (pleasant)"};

inline constexpr std::array<std::string_view, kSamLevels> kArousalDesc{
    "Very calm", "Calm (dull)", "Moderate (neutral)", "Excited (wide-awake)", "Very excited"};

// [valence level - 1][arousal level - 1]
inline constexpr std::array<std::array<std::string_view, kSamLevels>, kSamLevels> kGreetings{{
    {"Oh... it's you again. Why bother?", "Hi. Whatever. Let's get this over with.",
     "What now? I hope this doesn't take long.", "Great. Just what I needed. More trouble.",
     "Oh, fantastic! Another disaster waiting to happen!"},
    {"Hello. This isn't quite what I expected.", "Hi. Not great, but let's move on.",
     "Well, this could've been better. Let's see.", "Oh, come on! This is disappointing!",
     "Really?! This is the best we can do?!"},
    {"Hello there. How are you?", "Hi. What's going on?", "Hey. What's up?",
     "Hello! What's happening?", "Hi! How's everything going?!"},
    {"Hello. It's nice to see you.", "Hi. Good to see you.", "Hey, nice! Let's get started.",
     "Hi there! This is going to be great!", "Hello! I'm so glad you're here!"},
    {"Hello. It's wonderful to have you here.", "Hi. Great to see you.", "Hey! This is awesome!",
     "Hi there! This is fantastic!", "Hello! Wow, I'm thrilled you're here!"},
}};

inline void check_level(int level) {
    if (level < 1 || level > kSamLevels) {
        throw DomainError("SAM level out of range 1..5: " + std::to_string(level));
    }
}

} // namespace detail

struct SamLevel {
    int index = 3;
    std::string_view valence_desc;
    std::string_view arousal_desc;

    // Description for the requested dimension.
    std::string_view desc(Dimension d) const { return d == Dimension::valence ? valence_desc : arousal_desc; }

    static SamLevel of_index(int index) {
        detail::check_level(index);
        return {index, detail::kValenceDesc[index - 1], detail::kArousalDesc[index - 1]};
    }

    friend bool operator==(const SamLevel& a, const SamLevel& b) { return a.index == b.index; }
};

// One of the 25 discrete emotional states.
class SamCell {
public:
    SamCell() = default;
    SamCell(int valence_level, int arousal_level)
        : valence_level_(valence_level), arousal_level_(arousal_level) {
        detail::check_level(valence_level);
        detail::check_level(arousal_level);
    }

    int valence_level() const { return valence_level_; }
    int arousal_level() const { return arousal_level_; }
    int level(Dimension d) const { return d == Dimension::valence ? valence_level_ : arousal_level_; }

    std::string_view valence_desc() const { return detail::kValenceDesc[valence_level_ - 1]; }
    std::string_view arousal_desc() const { return detail::kArousalDesc[arousal_level_ - 1]; }

    friend bool operator==(const SamCell&, const SamCell&) = default;
    friend auto operator<=>(const SamCell&, const SamCell&) = default;

private:
    int valence_level_ = 3;
    int arousal_level_ = 3;
};

// Half-open bins [0,.2) [.2,.4) [.4,.6) [.6,.8) and a closed last bin [.8,1].
inline SamLevel sam_level_of(double value, Dimension /*dimension*/ = Dimension::valence) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw DomainError("value out of [0,1]: " + std::to_string(value));
    }
    static constexpr std::array<double, 4> kUpper{0.2, 0.4, 0.6, 0.8};
    int level = 1;
    for (double edge : kUpper) {
        if (value >= edge) ++level;
    }
    return SamLevel::of_index(level);
}

inline SamCell cell_of(const VAPoint& p) {
    return {sam_level_of(p.valence(), Dimension::valence).index,
            sam_level_of(p.arousal(), Dimension::arousal).index};
}

inline VAPoint cell_midpoint(const SamCell& cell) {
    return {(2 * cell.valence_level() - 1) / 10.0, (2 * cell.arousal_level() - 1) / 10.0};
}

inline std::string_view greeting_for(const SamCell& cell) {
    return detail::kGreetings[cell.valence_level() - 1][cell.arousal_level() - 1];
}

struct SamOffset {
    int dv = 0;
    int da = 0;
    int get(Dimension d) const { return d == Dimension::valence ? dv : da; }
    friend bool operator==(const SamOffset&, const SamOffset&) = default;
};

inline SamOffset sam_offset(const SamCell& prompted, const VAPoint& scored) {
    const SamCell got = cell_of(scored);
    return {got.valence_level() - prompted.valence_level(), got.arousal_level() - prompted.arousal_level()};
}

// A VA point paired with its discretization. The cell is always derived.
class EmotionalState {
public:
    EmotionalState() : EmotionalState(VAPoint{}) {}
    explicit EmotionalState(const VAPoint& va) : va_(va), cell_(cell_of(va)) {}

    const VAPoint& va() const { return va_; }
    const SamCell& cell() const { return cell_; }

    friend bool operator==(const EmotionalState&, const EmotionalState&) = default;

private:
    VAPoint va_;
    SamCell cell_;
};

inline std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Machine-readable dump of the level descriptions and greeting grid.
inline nlohmann::ordered_json export_assets() {
    nlohmann::ordered_json out;
    auto& levels = out["sam_levels"] = nlohmann::ordered_json::array();
    for (int k = 1; k <= kSamLevels; ++k) {
        const auto lvl = SamLevel::of_index(k);
        levels.push_back({{"index", k},
                          {"range", {(k - 1) / 5.0, k / 5.0}},
                          {"valence", std::string(lvl.valence_desc)},
                          {"arousal", std::string(lvl.arousal_desc)}});
    }
    auto& greetings = out["greetings"] = nlohmann::ordered_json::array();
    for (int v = 1; v <= kSamLevels; ++v) {
        for (int a = 1; a <= kSamLevels; ++a) {
            const SamCell c{v, a};
            greetings.push_back({{"valence_level", v},
                                 {"arousal_level", a},
                                 {"valence", std::string(c.valence_desc())},
                                 {"arousal", std::string(c.arousal_desc())},
                                 {"greeting", std::string(greeting_for(c))}});
        }
    }
    return out;
}

} // namespace affectsim
