#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ctgfm/metrics.hpp"
#include "ctgfm/preprocess.hpp"
#include "ctgfm/synth.hpp"
#include "doctest.h"

using namespace ctgfm;
using namespace ctgfm::synth;

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

// mean depression of FHR below its configured baseline
double mean_dip(const std::vector<double>& fhr, double baseline) {
    double s = 0.0;
    for (double v : fhr) s += std::max(0.0, baseline - v);
    return s / static_cast<double>(fhr.size());
}

}  // namespace

TEST_CASE("generation is deterministic per seed and id") {
    SynthConfig cfg;
    cfg.duration_s = 480.0;
    cfg.decel_prob = 0.7;
    cfg.seed = 5;
    const SynthResult a = generate_recording(cfg, "rec");
    const SynthResult b = generate_recording(cfg, "rec");
    CHECK(a.recording.fhr == b.recording.fhr);
    CHECK(a.recording.uc == b.recording.uc);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].kind == b.events[i].kind);
        CHECK(a.events[i].time_s == b.events[i].time_s);
    }

    const SynthResult c = generate_recording(cfg, "other");
    CHECK(c.recording.fhr != a.recording.fhr);

    cfg.seed = 6;
    const SynthResult d = generate_recording(cfg, "rec");
    CHECK(d.recording.fhr != a.recording.fhr);
}

TEST_CASE("signals stay inside their physiological ranges") {
    SynthConfig cfg;
    cfg.duration_s = 900.0;
    cfg.decel_prob = 1.0;
    cfg.decel_depth_bpm = 60.0;  // deliberately deep
    cfg.variability_bpm = 10.0;
    cfg.seed = 7;
    const SynthResult r = generate_recording(cfg, "ranges");
    CHECK(r.recording.length() == 3600);
    for (double v : r.recording.fhr) {
        CHECK(v >= 60.0);
        CHECK(v <= 200.0);
    }
    for (double v : r.recording.uc) {
        CHECK(v >= 5.0);
        CHECK(v <= 95.0);
    }
    for (bool b : r.recording.fhr_valid) CHECK(b);
}

TEST_CASE("the event log matches the waveform") {
    SynthConfig cfg;
    cfg.duration_s = 900.0;
    cfg.decel_prob = 1.0;
    cfg.decel_depth_bpm = 30.0;
    cfg.decel_lag_s = 20.0;
    cfg.seed = 11;
    const SynthResult r = generate_recording(cfg, "events");

    std::size_t contractions = 0, decels = 0;
    for (const auto& e : r.events) {
        if (e.kind == SynthEvent::Kind::contraction) {
            ++contractions;
            // UC at the logged peak is far above resting tone
            const auto idx = static_cast<std::size_t>(e.time_s * 4.0);
            CHECK(r.recording.uc[idx] > 40.0);
        } else {
            ++decels;
            // FHR near the logged nadir dips at least half the depth
            const auto lo = static_cast<std::size_t>(std::max(0.0, (e.time_s - 10.0) * 4.0));
            const auto hi = std::min(r.recording.length(),
                                     static_cast<std::size_t>((e.time_s + 10.0) * 4.0));
            double fhr_min = 1e9;
            for (std::size_t i = lo; i < hi; ++i) fhr_min = std::min(fhr_min, r.recording.fhr[i]);
            CHECK(fhr_min <= cfg.baseline_bpm - 0.5 * cfg.decel_depth_bpm);
        }
    }
    CHECK(contractions >= 3);
    CHECK(decels == contractions);  // probability one couples every contraction
}

TEST_CASE("every contraction is answered by a sufficient dip at probability one") {
    SynthConfig cfg;
    cfg.duration_s = 900.0;
    cfg.decel_prob = 1.0;
    cfg.decel_depth_bpm = 30.0;
    cfg.decel_lag_s = 25.0;
    cfg.seed = 13;
    const SynthResult r = generate_recording(cfg, "coupled");
    for (const auto& e : r.events) {
        if (e.kind != SynthEvent::Kind::contraction) continue;
        const double onset = e.time_s - 30.0;  // peak sits mid-contraction
        const double from = onset + cfg.decel_lag_s - 10.0;
        const double to = onset + cfg.decel_lag_s + 45.0 + 10.0;
        const auto lo = static_cast<std::size_t>(std::max(0.0, from * 4.0));
        const auto hi = std::min(r.recording.length(), static_cast<std::size_t>(to * 4.0));
        double fhr_min = 1e9;
        for (std::size_t i = lo; i < hi; ++i) fhr_min = std::min(fhr_min, r.recording.fhr[i]);
        CHECK(fhr_min <= cfg.baseline_bpm - 20.0);
    }
}

TEST_CASE("decoupled generation leaves the channels uncorrelated") {
    SynthConfig cfg;
    cfg.duration_s = 1200.0;
    cfg.decel_prob = 0.0;
    cfg.seed = 17;
    const SynthResult r = generate_recording(cfg, "decoupled");
    for (const auto& e : r.events) CHECK(e.kind == SynthEvent::Kind::contraction);
    CHECK(std::abs(pearson(r.recording.fhr, r.recording.uc)) < 0.2);

    // coupling at full depth produces a strong negative correlation instead
    cfg.decel_prob = 1.0;
    cfg.decel_depth_bpm = 45.0;
    cfg.decel_lag_s = 0.0;
    const SynthResult c = generate_recording(cfg, "coupled");
    CHECK(pearson(c.recording.fhr, c.recording.uc) < -0.4);
}

TEST_CASE("configuration is validated") {
    SynthConfig cfg;
    cfg.duration_s = 449.0;
    CHECK_THROWS(generate_recording(cfg, "short"));
    cfg = SynthConfig();
    cfg.decel_prob = 1.5;
    CHECK_THROWS(generate_recording(cfg, "prob"));
    cfg = SynthConfig();
    cfg.contraction_amp_mmhg = -1.0;
    CHECK_THROWS(generate_recording(cfg, "amp"));
}

TEST_CASE("corpus counts, names, and labels") {
    SynthConfig tmpl;
    tmpl.duration_s = 460.0;
    const auto corpus = generate_raw_corpus(20, 0.8, tmpl, 3);
    REQUIRE(corpus.size() == 20);
    std::size_t positives = 0;
    for (const auto& rec : corpus) positives += rec.positive ? 1 : 0;
    CHECK(positives == 4);
    CHECK(corpus[0].result.recording.id == "synth-0000");
    CHECK(corpus[19].result.recording.id == "synth-0019");
    CHECK_FALSE(corpus[0].positive);
    CHECK(corpus[19].positive);

    CHECK_THROWS(generate_raw_corpus(1, 0.5, tmpl, 3));
    CHECK_THROWS(generate_raw_corpus(10, 0.0, tmpl, 3));
    CHECK_THROWS(generate_raw_corpus(10, 1.0, tmpl, 3));
    CHECK_THROWS(generate_raw_corpus(10, 0.99, tmpl, 3));  // leaves no positives
}

TEST_CASE("the corpus separates on the mean-dip feature") {
    SynthConfig tmpl;
    tmpl.duration_s = 900.0;
    const auto corpus = generate_corpus(30, 0.7, tmpl, 9);
    std::vector<bool> labels;
    std::vector<double> dips;
    for (const auto& lc : corpus) {
        labels.push_back(lc.positive);
        dips.push_back(mean_dip(lc.rec.fhr, tmpl.baseline_bpm));
    }
    CHECK(metrics::auc(labels, dips) >= 0.9);
}

TEST_CASE("cleaned corpus recordings keep their raw samples") {
    SynthConfig tmpl;
    tmpl.duration_s = 480.0;
    const auto raw = generate_raw_corpus(4, 0.5, tmpl, 21);
    const auto clean = generate_corpus(4, 0.5, tmpl, 21);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(clean[k].rec.id == raw[k].result.recording.id);
        CHECK(clean[k].rec.fhr == raw[k].result.recording.fhr);
        CHECK(clean[k].rec.uc == raw[k].result.recording.uc);
        for (bool b : clean[k].rec.synthetic_mask) CHECK_FALSE(b);
    }
}

TEST_CASE("flat-UC injection writes a detectable plateau") {
    SynthConfig cfg;
    cfg.duration_s = 480.0;
    cfg.inject_flat_uc = true;
    cfg.seed = 23;
    const SynthResult r = generate_recording(cfg, "flat");

    std::size_t longest = 0, run = 0;
    for (std::size_t i = 0; i < r.recording.uc.size(); ++i) {
        if (r.recording.uc[i] == 30.0) {
            ++run;
            longest = std::max(longest, run);
        } else {
            run = 0;
        }
    }
    CHECK(longest >= 160);

    // preprocessing flags and bridges exactly that stretch
    const auto clean = preprocess::preprocess_pipeline(r.recording);
    std::size_t flagged = 0;
    for (bool b : clean.synthetic_mask) flagged += b ? 1 : 0;
    CHECK(flagged >= 160);
    CHECK(flagged <= 200);
}

TEST_CASE("metadata generation matches the label side of the pH threshold") {
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        const auto pos = synth_metadata("p", true, rng);
        CHECK(pos.ph < 7.15);
        CHECK(pos.apgar1 >= 4);
        CHECK(pos.apgar1 <= 7);
        const auto neg = synth_metadata("n", false, rng);
        CHECK(neg.ph >= 7.15);
        CHECK(neg.apgar5 >= 9);
    }
    Rng r1(5), r2(5);
    const auto a = synth_metadata("x", true, r1);
    const auto b = synth_metadata("x", true, r2);
    CHECK(a.ph == b.ph);
    CHECK(a.delivery_type == b.delivery_type);
    CHECK(a.birth_weight_g == b.birth_weight_g);
}
