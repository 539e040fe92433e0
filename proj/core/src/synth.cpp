#include "ctgfm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ctgfm::synth {

namespace {

constexpr double kPi = 3.141592653589793238462643;
constexpr double kContractionWidthS = 60.0;
constexpr double kDecelWidthS = 45.0;
constexpr double kUcRestingTone = 8.0;

// Half-cosine bump rising from 0 to `amp` and back over `width` seconds.
double raised_cosine(double t, double onset, double width, double amp) {
    if (t < onset || t > onset + width) return 0.0;
    return 0.5 * amp * (1.0 - std::cos(2.0 * kPi * (t - onset) / width));
}

}  // namespace

void SynthConfig::validate() const {
    if (duration_s < 450.0) {
        throw std::invalid_argument("SynthConfig: duration_s must be >= 450");
    }
    if (baseline_bpm <= 0.0 || variability_bpm <= 0.0 || contraction_amp_mmhg <= 0.0 ||
        decel_depth_bpm <= 0.0 || contraction_period_s <= 0.0) {
        throw std::invalid_argument("SynthConfig: amplitudes and periods must be positive");
    }
    if (decel_lag_s < 0.0) throw std::invalid_argument("SynthConfig: decel_lag_s must be >= 0");
    if (!(decel_prob >= 0.0 && decel_prob <= 1.0)) {
        throw std::invalid_argument("SynthConfig: decel_prob must be in [0, 1]");
    }
}

SynthResult generate_recording(const SynthConfig& cfg, const std::string& id) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, "synth-recording", fnv1a64(id)));

    constexpr int kHz = 4;
    const std::size_t n = static_cast<std::size_t>(cfg.duration_s * kHz);

    SynthResult out;
    out.recording.id = id;
    out.recording.sample_rate_hz = kHz;

    // Contraction onsets with +-30% period jitter.
    std::vector<double> onsets;
    double onset = rng.uniform(10.0, 10.0 + cfg.contraction_period_s);
    while (onset + kContractionWidthS < cfg.duration_s) {
        onsets.push_back(onset);
        onset += cfg.contraction_period_s * rng.uniform(0.7, 1.3);
    }

    // Decide decelerations before sampling the noise so the generator's
    // draw order is independent of the signal length.
    std::vector<double> decel_starts;
    for (double c : onsets) {
        out.events.push_back({SynthEvent::Kind::contraction, c + kContractionWidthS / 2.0});
        if (rng.bernoulli(cfg.decel_prob)) {
            const double start = c + cfg.decel_lag_s;
            decel_starts.push_back(start);
            out.events.push_back({SynthEvent::Kind::deceleration, start + kDecelWidthS / 2.0});
        }
    }

    struct Wave {
        double amp, freq, phase;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < 3; ++i) {
        waves.push_back({0.45 * cfg.variability_bpm, rng.uniform(0.005, 0.05),
                         rng.uniform(0.0, 2.0 * kPi)});
    }

    // Slow drift on the UC resting tone keeps every 30 s window away from
    // numerically-flat, so the flat-segment cleanup rule never fires on
    // generated data.
    const Wave tone_drift{1.0, rng.uniform(0.008, 0.015), rng.uniform(0.0, 2.0 * kPi)};

    // Lightly low-passed white noise: a 3-tap binomial filter keeps
    // consecutive-sample jumps far below the spike-removal threshold while
    // the scale restores an unfiltered std of 0.8 * variability.
    std::vector<double> white(n);
    for (double& v : white) v = rng.normal();
    const double noise_scale = 0.8 / std::sqrt(0.375);

    out.recording.fhr.resize(n);
    out.recording.uc.resize(n);
    out.recording.fhr_valid.assign(n, true);
    out.recording.uc_valid.assign(n, true);

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / kHz;

        double uc = kUcRestingTone +
                    tone_drift.amp * std::sin(2.0 * kPi * tone_drift.freq * t + tone_drift.phase);
        for (double c : onsets) {
            uc += raised_cosine(t, c, kContractionWidthS, cfg.contraction_amp_mmhg);
        }

        double fhr = cfg.baseline_bpm;
        for (const Wave& w : waves) fhr += w.amp * std::sin(2.0 * kPi * w.freq * t + w.phase);
        const double w_prev = white[i == 0 ? 0 : i - 1];
        const double w_next = white[i + 1 < n ? i + 1 : n - 1];
        fhr += cfg.variability_bpm * noise_scale * (0.25 * w_prev + 0.5 * white[i] + 0.25 * w_next);
        for (double d : decel_starts) {
            fhr -= raised_cosine(t, d, kDecelWidthS, cfg.decel_depth_bpm);
        }

        out.recording.fhr[i] = std::clamp(fhr, 60.0, 200.0);
        out.recording.uc[i] = std::clamp(uc, 5.0, 95.0);
    }

    if (cfg.inject_flat_uc) {
        const std::size_t flat_len = 160;  // 40 s
        const std::size_t lo = n / 5;
        const std::size_t hi = (3 * n) / 5;
        const std::size_t start = lo + rng.integer(hi - lo);
        for (std::size_t i = start; i < std::min(n, start + flat_len); ++i) {
            out.recording.uc[i] = 30.0;
        }
    }
    return out;
}

std::vector<LabeledRaw> generate_raw_corpus(std::size_t n, double healthy_fraction,
                                            const SynthConfig& tmpl, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("generate_corpus: need n >= 2");
    if (!(healthy_fraction > 0.0 && healthy_fraction < 1.0)) {
        throw std::invalid_argument("generate_corpus: healthy_fraction must be in (0, 1)");
    }
    const auto n_healthy =
        static_cast<std::size_t>(std::llround(healthy_fraction * static_cast<double>(n)));
    if (n_healthy == 0 || n_healthy == n) {
        throw std::invalid_argument("generate_corpus: fraction leaves a class empty");
    }

    std::vector<LabeledRaw> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool healthy = i < n_healthy;
        SynthConfig cfg = tmpl;
        cfg.seed = derive_seed(seed, "corpus-recording", i);
        if (healthy) {
            cfg.label_rule = SynthConfig::LabelRule::healthy;
            cfg.decel_prob = 0.1;
            cfg.decel_depth_bpm = 10.0;
            cfg.decel_lag_s = 15.0;
        } else {
            cfg.label_rule = SynthConfig::LabelRule::compromised;
            cfg.decel_prob = 1.0;
            cfg.decel_depth_bpm = 45.0;
            cfg.decel_lag_s = 30.0;
        }
        char name[32];
        std::snprintf(name, sizeof(name), "synth-%04zu", i);
        out.push_back({generate_recording(cfg, name), !healthy});
    }
    return out;
}

std::vector<LabeledClean> generate_corpus(std::size_t n, double healthy_fraction,
                                          const SynthConfig& tmpl, std::uint64_t seed) {
    std::vector<LabeledClean> out;
    out.reserve(n);
    for (auto& raw : generate_raw_corpus(n, healthy_fraction, tmpl, seed)) {
        out.push_back({preprocess::preprocess_pipeline(raw.result.recording), raw.positive});
    }
    return out;
}

data::ClinicalMetadata synth_metadata(const std::string& id, bool positive, Rng& rng) {
    data::ClinicalMetadata m;
    m.id = id;
    m.ph = positive ? rng.uniform(6.95, 7.10) : rng.uniform(7.22, 7.45);
    m.delivery_type = rng.bernoulli(0.85) ? data::DeliveryType::vaginal
                                          : data::DeliveryType::cesarean;
    m.presentation = rng.bernoulli(0.9) ? data::Presentation::cephalic
                                        : data::Presentation::other;
    m.labor_arrest = rng.bernoulli(0.1);
    m.induced = rng.bernoulli(0.3);
    if (positive) {
        m.apgar1 = 4 + static_cast<int>(rng.integer(4));  // 4-7
        m.apgar5 = 6 + static_cast<int>(rng.integer(3));  // 6-8
    } else {
        m.apgar1 = 8 + static_cast<int>(rng.integer(2));  // 8-9
        m.apgar5 = 9 + static_cast<int>(rng.integer(2));  // 9-10
    }
    m.gestational_age_weeks = rng.uniform(37.0, 41.0);
    m.birth_weight_g = rng.uniform(2800.0, 3900.0);
    return m;
}

}  // namespace ctgfm::synth
