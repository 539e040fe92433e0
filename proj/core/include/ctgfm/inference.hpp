#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ctgfm/model.hpp"
#include "ctgfm/preprocess.hpp"
#include "ctgfm/train.hpp"

namespace ctgfm::inference {

// Per-sample risk trace from sliding-window classification. Each window's
// probability is written onto the stride of samples ending at the window's
// last sample; the first window back-fills its whole extent. Samples no
// window has scored yet are uncovered.
struct PredictionTrace {
    std::vector<double> scores;  // recording length; 0 where uncovered
    std::vector<bool> coverage;
    std::size_t window_len = 0;
    std::size_t stride = 0;
};

// Maximal run of covered samples with score above threshold, plus the four
// classifier features.
struct AlertSegment {
    std::size_t start = 0;  // inclusive
    std::size_t end = 0;    // exclusive
    std::size_t length = 0;
    double max = 0.0;
    double cumsum = 0.0;
    double weighted_integral = 0.0;  // sum of (p - 0.5)^2
};

// Classifies every full context window starting at 0, stride, 2*stride, ...
// The recording must be at least one context window long. `jobs` > 1 fans
// window evaluations across threads; the trace is identical either way.
PredictionTrace sliding_predict(const model::ModelParams& params,
                                const preprocess::CleanRecording& rec,
                                std::size_t stride, std::size_t jobs = 1);

std::vector<AlertSegment> extract_alerts(const PredictionTrace& trace,
                                         double threshold = 0.5);

// Feature vector in the alert classifier's order: length, max, cumsum,
// weighted integral.
std::array<double, 4> segment_features(const AlertSegment& seg);

// Probability from the logistic model on the largest segment (longest;
// ties by weighted integral, then earlier start). No segments -> 0.
double classify_recording(const std::vector<AlertSegment>& segments,
                          const train::LogisticModel& lr);

// CSV with columns t_sec,score,fhr_bpm,uc_mmhg,in_alert; when svg_path is
// nonempty, also a three-panel SVG rendering of FHR, UC, and the trace.
void emit_trace(const PredictionTrace& trace, const preprocess::CleanRecording& rec,
                const std::vector<AlertSegment>& segments, const std::string& path,
                const std::string& svg_path = "");

}  // namespace ctgfm::inference
