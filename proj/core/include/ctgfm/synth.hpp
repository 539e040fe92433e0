#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctgfm/data.hpp"
#include "ctgfm/preprocess.hpp"
#include "ctgfm/rng.hpp"

namespace ctgfm::synth {

// Controllable CTG generator: smooth contraction bumps on the UC channel and
// a noisy FHR baseline with optional contraction-coupled decelerations.
// Contraction spacing is jittered around the configured period so decoupled
// and coupled corpora differ only through the coupling itself.
struct SynthConfig {
    double duration_s = 450.0;
    double baseline_bpm = 140.0;
    double variability_bpm = 5.0;
    double contraction_period_s = 180.0;
    double contraction_amp_mmhg = 60.0;
    double decel_depth_bpm = 30.0;
    double decel_lag_s = 20.0;
    double decel_prob = 0.0;
    enum class LabelRule { healthy, compromised };
    LabelRule label_rule = LabelRule::healthy;
    bool inject_flat_uc = false;  // overwrite one 40 s UC stretch with a constant
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthEvent {
    enum class Kind { contraction, deceleration };
    Kind kind = Kind::contraction;
    double time_s = 0.0;  // contraction peak / deceleration nadir
};

struct SynthResult {
    data::Recording recording;
    std::vector<SynthEvent> events;
};

// Deterministic per (cfg.seed, id). FHR stays within [60, 200] bpm and UC
// within [5, 95] mmHg, so the preprocessing clip rules are identities on
// generated data.
SynthResult generate_recording(const SynthConfig& cfg, const std::string& id);

struct LabeledRaw {
    SynthResult result;
    bool positive = false;
};

// round(n * healthy_fraction) healthy recordings (rare, shallow
// decelerations) followed by compromised ones (every contraction answered
// by a deep, long-lag deceleration). Recording k is named synth-<k>.
std::vector<LabeledRaw> generate_raw_corpus(std::size_t n, double healthy_fraction,
                                            const SynthConfig& tmpl, std::uint64_t seed);

struct LabeledClean {
    preprocess::CleanRecording rec;
    bool positive = false;
};

// generate_raw_corpus with the cleaning pipeline applied.
std::vector<LabeledClean> generate_corpus(std::size_t n, double healthy_fraction,
                                          const SynthConfig& tmpl, std::uint64_t seed);

// Plausible clinical metadata for a generated recording; ph is drawn on the
// matching side of the acidemia threshold.
data::ClinicalMetadata synth_metadata(const std::string& id, bool positive, Rng& rng);

}  // namespace ctgfm::synth
