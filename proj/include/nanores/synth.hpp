#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "nanores/audio.hpp"
#include "nanores/errors.hpp"
#include "nanores/rng.hpp"

namespace nanores {

/// Parameters of the bundled synthetic spoken-digit stand-in corpus. Each
/// class is coded by envelope shape (attack length, amplitude-modulation
/// rate, tail level) and by voicing: low digits lean on a sustained unipolar
/// glottal pulse train, high digits on a bipolar harmonic carrier. Each
/// speaker shifts pitch, envelope skew and harmonic mix; each trial
/// randomizes carrier phase, duration, onset and noise. Class identity
/// therefore lives mostly in the energy envelope and voicing character,
/// while the raw waveform samples vary strongly per trial.
struct SynthConfig {
    std::vector<std::string> speakers = {"alpha", "bravo", "charlie"};
    int digits = 10;
    int trials = 10;
    std::uint32_t sample_rate = 8000;
    double base_duration = 0.5;  ///< seconds
    std::uint64_t seed = 7;

    void validate() const {
        if (speakers.empty()) throw ConfigError("synth: need at least one speaker");
        for (const auto& s : speakers)
            if (s.empty() || s.find('_') != std::string::npos || s.find('/') != std::string::npos)
                throw ConfigError("synth: speaker names must be non-empty and free of '_' and '/'");
        if (digits < 1 || digits > 10) throw ConfigError("synth: digits must lie in [1, 10]");
        if (trials < 1) throw ConfigError("synth: trials must be >= 1");
        if (sample_rate < 1000) throw ConfigError("synth: sample_rate too low");
        if (!(base_duration > 0.0)) throw ConfigError("synth: base_duration must be positive");
    }
};

namespace synth_detail {

struct SpeakerVoice {
    double pitch;
    double skew;      ///< envelope shape exponent
    double am_depth;
    double harmonic;  ///< second harmonic mix
};

inline SpeakerVoice voice(std::size_t idx) {
    static const SpeakerVoice table[] = {
        {1.00, 1.00, 0.55, 0.30},
        {0.93, 0.82, 0.45, 0.15},
        {1.07, 1.22, 0.62, 0.45},
        {0.97, 1.10, 0.50, 0.25},
        {1.03, 0.90, 0.58, 0.38},
    };
    SpeakerVoice v = table[idx % 5];
    v.pitch *= 1.0 + 0.015 * static_cast<double>(idx / 5);
    return v;
}

/// Flat-topped glottal pulse: one period maps phase x in [0,1) onto an open
/// phase with raised-cosine edges followed by a closed (zero) gap.
inline double glottal(double x, double closed, double edge) {
    const double open = 1.0 - closed;
    if (x >= open) return 0.0;
    const double y = x / open;
    if (y < edge) return 0.5 * (1.0 - std::cos(std::numbers::pi * y / edge));
    if (y > 1.0 - edge) return 0.5 * (1.0 - std::cos(std::numbers::pi * (1.0 - y) / edge));
    return 1.0;
}

}  // namespace synth_detail

/// Synthesizes one clip. Deterministic in (config seed, speaker index,
/// digit, trial).
inline std::vector<double> synth_clip(const SynthConfig& cfg, std::size_t speaker_idx, int digit,
                                      int trial) {
    const auto v = synth_detail::voice(speaker_idx);
    std::uint64_t s = derive_seed(cfg.seed, "synth-clip");
    s = derive_seed(s, cfg.speakers[speaker_idx]);
    s = mix64(s, static_cast<std::uint64_t>(digit));
    s = mix64(s, static_cast<std::uint64_t>(trial));
    Rng rng(s);

    const double duration = cfg.base_duration * (1.0 + 0.08 * (2.0 * rng.uniform() - 1.0));
    const auto n = static_cast<std::size_t>(std::llround(duration * cfg.sample_rate));
    const double onset = rng.uniform(0.0, 0.01);  // fraction of the clip before the voice starts

    // class-coded envelope and voicing; low digits sustain, high digits decay
    const double voiced = std::max(0.0, 1.0 - digit / 3.0);
    const double attack = 0.05 + 0.018 * digit;        // rise time fraction
    const double am_rate = 2.0 * (1.0 + digit);        // modulation cycles per clip
    const double base_tail = 0.15 + 0.08 * ((digit * 3) % 5);  // level the decay settles to
    const double tail = base_tail + voiced * (0.88 - base_tail);
    const double am_depth = v.am_depth * (0.9 + 0.2 * rng.uniform()) * (1.0 - 0.75 * voiced);

    const double f0 = (170.0 + 55.0 * digit) * v.pitch * (1.0 + 0.01 * (2.0 * rng.uniform() - 1.0));
    const double phase1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double phase2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    // stress cadence is anchored per digit so the modulation pattern is a
    // stable class cue; trials drift only slightly around the anchor
    const double am_phase =
        0.4 * std::fmod(0.381966011 * (digit + 1), 1.0) + rng.uniform(0.0, 0.08);
    const double peak = 0.72 + 0.12 * rng.uniform();
    const double noise_sd = 0.012;

    std::vector<double> out(n, 0.0);
    double raw_peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n);  // clip position
        double env = 0.0;
        if (u > onset) {
            const double w = (u - onset) / (1.0 - onset);
            const double rise = w < attack ? w / attack : 1.0;
            const double fall = w < attack
                                    ? 1.0
                                    : tail + (1.0 - tail) * std::exp(-2.2 * (w - attack));
            const double am =
                1.0 - am_depth * 0.5 *
                          (1.0 - std::cos(2.0 * std::numbers::pi * (am_rate * w + am_phase)));
            const double stress =
                1.0 + 0.32 * voiced * std::exp(-std::max(0.0, w - attack) / 0.05);  // onset burst
            env = std::pow(rise * fall, v.skew) * am * stress;
        }
        const double t = static_cast<double>(i) / cfg.sample_rate;
        const double carrier =
            (std::sin(2.0 * std::numbers::pi * f0 * t + phase1) +
             v.harmonic * std::sin(4.0 * std::numbers::pi * f0 * t + phase2)) /
            (1.0 + v.harmonic);
        const double gphase = f0 * t + phase1 / (2.0 * std::numbers::pi);
        const double pulse = synth_detail::glottal(gphase - std::floor(gphase), 0.08, 0.15);
        out[i] = env * ((1.0 - voiced) * carrier + voiced * pulse);
        raw_peak = std::max(raw_peak, std::abs(out[i]));
    }
    if (raw_peak > 0.0) {
        for (double& x : out) x = x / raw_peak * peak;
    }
    for (double& x : out) x += noise_sd * rng.normal(0.0, 1.0);
    return out;
}

/// Writes the corpus as {digit}_{speaker}_{trial}.wav files under dir.
inline void generate_corpus(const SynthConfig& cfg, const std::filesystem::path& dir) {
    cfg.validate();
    std::filesystem::create_directories(dir);
    for (std::size_t sp = 0; sp < cfg.speakers.size(); ++sp) {
        for (int digit = 0; digit < cfg.digits; ++digit) {
            for (int trial = 0; trial < cfg.trials; ++trial) {
                const auto samples = synth_clip(cfg, sp, digit, trial);
                const std::string name = std::to_string(digit) + "_" + cfg.speakers[sp] + "_" +
                                         std::to_string(trial) + ".wav";
                write_wav16(dir / name, samples, cfg.sample_rate);
            }
        }
    }
}

}  // namespace nanores
