#include "ctgfm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "ctgfm/patch.hpp"

namespace ctgfm::inference {

namespace {

double score_window(const model::ModelParams& params,
                    const preprocess::CleanRecording& rec, std::size_t start) {
    const auto& cfg = params.config;
    std::vector<double> fhr(rec.fhr_norm.begin() + start,
                            rec.fhr_norm.begin() + start + cfg.context_len);
    std::vector<double> uc(rec.uc_norm.begin() + start,
                           rec.uc_norm.begin() + start + cfg.context_len);
    const auto fp = patch::patchify(fhr, cfg.patch_len, cfg.stride, patch::Channel::fhr, start);
    const auto up = patch::patchify(uc, cfg.patch_len, cfg.stride, patch::Channel::uc, start);
    return model::predict_window(fp, up, params);
}

}  // namespace

PredictionTrace sliding_predict(const model::ModelParams& params,
                                const preprocess::CleanRecording& rec,
                                std::size_t stride, std::size_t jobs) {
    if (params.config.head_type != model::HeadType::classification) {
        throw std::runtime_error("sliding_predict: model has no classification head");
    }
    if (stride == 0) throw std::invalid_argument("sliding_predict: stride must be >= 1");
    const std::size_t W = params.config.context_len;
    const std::size_t L = rec.length();
    if (L < W) {
        throw std::runtime_error("sliding_predict: recording " + rec.id +
                                 " shorter than the context window");
    }

    const std::size_t n_windows = (L - W) / stride + 1;
    std::vector<double> probs(n_windows);
    if (jobs <= 1 || n_windows == 1) {
        for (std::size_t k = 0; k < n_windows; ++k) {
            probs[k] = score_window(params, rec, k * stride);
        }
    } else {
        const std::size_t n_threads = std::min(jobs, n_windows);
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t]() {
                for (std::size_t k = t; k < n_windows; k += n_threads) {
                    probs[k] = score_window(params, rec, k * stride);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    PredictionTrace trace;
    trace.window_len = W;
    trace.stride = stride;
    trace.scores.assign(L, 0.0);
    trace.coverage.assign(L, false);
    for (std::size_t k = 0; k < n_windows; ++k) {
        const std::size_t end = k * stride + W;  // exclusive
        const std::size_t begin = k == 0 ? 0 : end - std::min(stride, W);
        for (std::size_t i = begin; i < end; ++i) {
            trace.scores[i] = probs[k];
            trace.coverage[i] = true;
        }
    }
    return trace;
}

std::vector<AlertSegment> extract_alerts(const PredictionTrace& trace, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("extract_alerts: threshold must be in (0, 1)");
    }
    if (trace.scores.size() != trace.coverage.size()) {
        throw std::invalid_argument("extract_alerts: malformed trace");
    }
    std::vector<AlertSegment> out;
    const std::size_t n = trace.scores.size();
    std::size_t i = 0;
    while (i < n) {
        if (!trace.coverage[i] || !(trace.scores[i] > threshold)) {
            ++i;
            continue;
        }
        AlertSegment seg;
        seg.start = i;
        seg.max = trace.scores[i];
        while (i < n && trace.coverage[i] && trace.scores[i] > threshold) {
            const double p = trace.scores[i];
            seg.max = std::max(seg.max, p);
            seg.cumsum += p;
            seg.weighted_integral += (p - 0.5) * (p - 0.5);
            ++i;
        }
        seg.end = i;
        seg.length = seg.end - seg.start;
        out.push_back(seg);
    }
    return out;
}

std::array<double, 4> segment_features(const AlertSegment& seg) {
    return {static_cast<double>(seg.length), seg.max, seg.cumsum, seg.weighted_integral};
}

double classify_recording(const std::vector<AlertSegment>& segments,
                          const train::LogisticModel& lr) {
    if (segments.empty()) return 0.0;
    const AlertSegment* best = &segments.front();
    for (const auto& seg : segments) {
        if (seg.length > best->length ||
            (seg.length == best->length &&
             (seg.weighted_integral > best->weighted_integral ||
              (seg.weighted_integral == best->weighted_integral && seg.start < best->start)))) {
            best = &seg;
        }
    }
    return train::predict(lr, segment_features(*best));
}

namespace {

void write_svg(const PredictionTrace& trace, const preprocess::CleanRecording& rec,
               const std::vector<bool>& in_alert, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace svg " + path);

    const std::size_t n = rec.length();
    const double width = 900.0, panel_h = 140.0, gap = 30.0, left = 50.0;
    const double plot_w = width - left - 20.0;
    const double total_h = 3 * panel_h + 4 * gap;

    auto x_of = [&](std::size_t i) {
        return left + plot_w * static_cast<double>(i) / std::max<std::size_t>(n - 1, 1);
    };
    auto polyline = [&](const std::vector<double>& v, double lo, double hi, double top,
                        const char* color) {
        std::string pts;
        char buf[64];
        const std::size_t step = std::max<std::size_t>(1, n / 2000);
        for (std::size_t i = 0; i < n; i += step) {
            const double frac = (std::clamp(v[i], lo, hi) - lo) / (hi - lo);
            std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", x_of(i),
                          top + panel_h * (1.0 - frac));
            pts += buf;
        }
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1\" points=\"" << pts << "\"/>\n";
    };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << total_h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // alert shading behind the score panel
    const double score_top = 2 * gap + panel_h + (gap + panel_h);
    std::size_t i = 0;
    while (i < n) {
        if (!in_alert[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && in_alert[j]) ++j;
        out << "<rect x=\"" << x_of(i) << "\" y=\"" << score_top - panel_h - gap
            << "\" width=\"" << x_of(j - 1) - x_of(i) << "\" height=\""
            << 2 * panel_h + gap << "\" fill=\"#fdd\"/>\n";
        i = j;
    }

    double top = gap;
    out << "<text x=\"8\" y=\"" << top + 12 << "\" font-size=\"12\">FHR</text>\n";
    polyline(rec.fhr, 50.0, 210.0, top, "#1f77b4");
    top += panel_h + gap;
    out << "<text x=\"8\" y=\"" << top + 12 << "\" font-size=\"12\">UC</text>\n";
    polyline(rec.uc, 0.0, 100.0, top, "#2ca02c");
    top += panel_h + gap;
    out << "<text x=\"8\" y=\"" << top + 12 << "\" font-size=\"12\">risk</text>\n";
    polyline(trace.scores, 0.0, 1.0, top, "#d62728");
    out << "</svg>\n";
}

}  // namespace

void emit_trace(const PredictionTrace& trace, const preprocess::CleanRecording& rec,
                const std::vector<AlertSegment>& segments, const std::string& path,
                const std::string& svg_path) {
    if (trace.scores.size() != rec.length()) {
        throw std::invalid_argument("emit_trace: trace length does not match recording");
    }
    std::vector<bool> in_alert(rec.length(), false);
    for (const auto& seg : segments) {
        for (std::size_t i = seg.start; i < seg.end; ++i) in_alert[i] = true;
    }

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace " + path);
    out << "t_sec,score,fhr_bpm,uc_mmhg,in_alert\n";
    char buf[160];
    for (std::size_t i = 0; i < rec.length(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.9g,%.6g,%.6g,%d\n",
                      static_cast<double>(i) / rec.sample_rate_hz, trace.scores[i],
                      rec.fhr[i], rec.uc[i], in_alert[i] ? 1 : 0);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed for trace " + path);

    if (!svg_path.empty()) write_svg(trace, rec, in_alert, svg_path);
}

}  // namespace ctgfm::inference
