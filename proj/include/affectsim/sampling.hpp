#pragma once

// Gaussian KDE over the empirical VA sample (diagonal Scott bandwidth) and the
// three opposing-affect presets.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affect_core.hpp"

namespace affectsim {

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class KdeModel {
public:
    KdeModel(std::vector<VAPoint> support, double valence_bandwidth, double arousal_bandwidth)
        : support_(std::move(support)), bandwidth_{valence_bandwidth, arousal_bandwidth} {
        if (support_.size() < 2) throw FitError("KDE needs at least 2 support points");
        if (!(valence_bandwidth > 0.0) || !(arousal_bandwidth > 0.0)) {
            throw FitError("KDE bandwidth must be strictly positive");
        }
    }

    const std::vector<VAPoint>& support() const { return support_; }
    double bandwidth(Dimension d) const { return bandwidth_[d == Dimension::valence ? 0 : 1]; }

private:
    std::vector<VAPoint> support_;
    std::array<double, 2> bandwidth_;
};

inline double sample_stddev(std::span<const VAPoint> points, Dimension d) {
    double mean = 0.0;
    for (const auto& p : points) mean += p.get(d);
    mean /= static_cast<double>(points.size());
    double ss = 0.0;
    for (const auto& p : points) ss += (p.get(d) - mean) * (p.get(d) - mean);
    return std::sqrt(ss / static_cast<double>(points.size() - 1));
}

// Scott's rule in two dimensions: h_j = n^(-1/6) * sd_j.
inline KdeModel fit_kde(std::vector<VAPoint> points) {
    if (points.size() < 2) throw FitError("fit_kde: need at least 2 points, got " + std::to_string(points.size()));
    const double factor = std::pow(static_cast<double>(points.size()), -1.0 / 6.0);
    const double hv = factor * sample_stddev(points, Dimension::valence);
    const double ha = factor * sample_stddev(points, Dimension::arousal);
    if (!(hv > 0.0) || !(ha > 0.0)) {
        throw FitError("fit_kde: degenerate input (zero spread in " +
                       std::string(hv > 0.0 ? "arousal" : "valence") + ")");
    }
    return {std::move(points), hv, ha};
}

// Picks a support point uniformly, perturbs it with the kernel and clamps to [0,1]^2.
template <class Rng>
EmotionalState sample_state(const KdeModel& model, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, model.support().size() - 1);
    const VAPoint& centre = model.support()[pick(rng)];
    std::normal_distribution<double> noise(0.0, 1.0);
    const double v = centre.valence() + model.bandwidth(Dimension::valence) * noise(rng);
    const double a = centre.arousal() + model.bandwidth(Dimension::arousal) * noise(rng);
    return EmotionalState{VAPoint::clamped(v, a)};
}

// Independent generator for logical stream `index` of a run.
inline std::mt19937_64 substream(std::uint64_t run_seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

enum class PresetLabel { HV_HA, LV_HA, NV_LA };

struct OpposingPreset {
    PresetLabel label;
    EmotionalState state;
};

inline std::string_view to_string(PresetLabel label) {
    switch (label) {
    case PresetLabel::HV_HA: return "hvha";
    case PresetLabel::LV_HA: return "lvha";
    case PresetLabel::NV_LA: return "nvla";
    }
    return "?";
}

inline PresetLabel parse_preset(std::string_view s) {
    if (s == "hvha" || s == "HV_HA") return PresetLabel::HV_HA;
    if (s == "lvha" || s == "LV_HA") return PresetLabel::LV_HA;
    if (s == "nvla" || s == "NV_LA") return PresetLabel::NV_LA;
    throw std::invalid_argument("unknown preset: " + std::string(s));
}

inline OpposingPreset preset(PresetLabel label) {
    switch (label) {
    case PresetLabel::HV_HA: return {label, EmotionalState{cell_midpoint({5, 5})}};
    case PresetLabel::LV_HA: return {label, EmotionalState{cell_midpoint({1, 5})}};
    case PresetLabel::NV_LA: return {label, EmotionalState{cell_midpoint({3, 1})}};
    }
    throw std::invalid_argument("bad preset label");
}

} // namespace affectsim
