#include "ctgfm/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace ctgfm::preprocess {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": series and validity lengths differ");
    }
}

}  // namespace

std::vector<bool> remove_implausible_fhr(const std::vector<double>& fhr,
                                         std::vector<bool> valid) {
    require_same_length(fhr.size(), valid.size(), "remove_implausible_fhr");
    for (std::size_t k = 0; k < fhr.size(); ++k) {
        if (valid[k] && (fhr[k] < 50.0 || fhr[k] > 220.0)) valid[k] = false;
    }
    return valid;
}

std::vector<bool> remove_spikes(const std::vector<double>& fhr,
                                std::vector<bool> valid, double jump_bpm) {
    require_same_length(fhr.size(), valid.size(), "remove_spikes");
    if (jump_bpm <= 0.0) throw std::invalid_argument("remove_spikes: jump_bpm must be > 0");

    bool have_prev = false;
    double prev = 0.0;
    std::size_t k = 0;
    while (k < fhr.size()) {
        if (!valid[k]) {
            ++k;
            continue;
        }
        if (!have_prev || std::abs(fhr[k] - prev) <= jump_bpm) {
            prev = fhr[k];
            have_prev = true;
            ++k;
            continue;
        }
        // Candidate spike: look for a return to the pre-spike level within
        // the next 5 samples.
        std::size_t ret = 0;
        for (std::size_t j = k + 1; j <= k + 5 && j < fhr.size(); ++j) {
            if (valid[j] && std::abs(fhr[j] - prev) <= jump_bpm) {
                ret = j;
                break;
            }
        }
        if (ret != 0) {
            for (std::size_t j = k; j < ret; ++j) valid[j] = false;
            k = ret;  // the return sample is re-examined as an ordinary sample
        } else {
            prev = fhr[k];  // genuine level shift
            ++k;
        }
    }
    return valid;
}

std::vector<bool> detect_flat_uc(const std::vector<double>& uc,
                                 std::vector<bool> valid) {
    require_same_length(uc.size(), valid.size(), "detect_flat_uc");
    constexpr std::size_t W = 120;
    constexpr double kStdThreshold = 1e-5;
    constexpr double kAmpThreshold = 80.0;
    if (uc.size() < W) return valid;

    const std::vector<bool> entry = valid;
    std::vector<bool> flat(uc.size(), false);
    for (std::size_t end = W - 1; end < uc.size(); ++end) {
        const std::size_t begin = end + 1 - W;
        bool eligible = true;
        double sum = 0.0;
        for (std::size_t i = begin; i <= end && eligible; ++i) {
            if (!entry[i] || uc[i] >= kAmpThreshold) eligible = false;
            sum += uc[i];
        }
        if (!eligible) continue;
        const double mean = sum / static_cast<double>(W);
        double ss = 0.0;
        for (std::size_t i = begin; i <= end; ++i) {
            const double d = uc[i] - mean;
            ss += d * d;
        }
        if (std::sqrt(ss / static_cast<double>(W)) < kStdThreshold) {
            for (std::size_t i = begin; i <= end; ++i) flat[i] = true;
        }
    }
    for (std::size_t i = 0; i < uc.size(); ++i) {
        if (flat[i]) valid[i] = false;
    }
    return valid;
}

std::pair<std::vector<double>, std::vector<bool>> interpolate_gaps(
    const std::vector<double>& series, const std::vector<bool>& valid) {
    require_same_length(series.size(), valid.size(), "interpolate_gaps");
    const std::size_t n = series.size();

    std::vector<std::size_t> anchors;
    for (std::size_t i = 0; i < n; ++i) {
        if (valid[i]) anchors.push_back(i);
    }
    if (anchors.empty()) throw std::runtime_error("interpolate_gaps: no valid samples");

    std::vector<double> out(series);
    std::vector<bool> mask(n, false);

    for (std::size_t i = 0; i < anchors.front(); ++i) {
        out[i] = series[anchors.front()];
        mask[i] = true;
    }
    for (std::size_t i = anchors.back() + 1; i < n; ++i) {
        out[i] = series[anchors.back()];
        mask[i] = true;
    }
    for (std::size_t a = 0; a + 1 < anchors.size(); ++a) {
        const std::size_t lo = anchors[a];
        const std::size_t hi = anchors[a + 1];
        if (hi == lo + 1) continue;
        const double y0 = series[lo];
        const double slope = (series[hi] - y0) / static_cast<double>(hi - lo);
        for (std::size_t i = lo + 1; i < hi; ++i) {
            out[i] = y0 + slope * static_cast<double>(i - lo);
            mask[i] = true;
        }
    }
    return {std::move(out), std::move(mask)};
}

double normalize_fhr(double bpm) {
    return std::clamp(bpm, 50.0, 210.0) / 160.0;
}

double normalize_uc(double mmhg) {
    return std::clamp(mmhg, 0.0, 100.0) / 100.0;
}

CleanRecording preprocess_pipeline(const data::Recording& rec) {
    std::vector<bool> fhr_valid = remove_implausible_fhr(rec.fhr, rec.fhr_valid);
    fhr_valid = remove_spikes(rec.fhr, std::move(fhr_valid));
    std::vector<bool> uc_valid = detect_flat_uc(rec.uc, rec.uc_valid);

    CleanRecording out;
    out.id = rec.id;
    out.sample_rate_hz = rec.sample_rate_hz;
    out.stage2_start_index = rec.stage2_start_index;

    std::vector<bool> fhr_mask, uc_mask;
    try {
        std::tie(out.fhr, fhr_mask) = interpolate_gaps(rec.fhr, fhr_valid);
    } catch (const std::exception&) {
        throw std::runtime_error("preprocess: recording " + rec.id +
                                 ": fhr channel has no valid samples");
    }
    try {
        std::tie(out.uc, uc_mask) = interpolate_gaps(rec.uc, uc_valid);
    } catch (const std::exception&) {
        throw std::runtime_error("preprocess: recording " + rec.id +
                                 ": uc channel has no valid samples");
    }

    const std::size_t n = out.fhr.size();
    out.fhr_norm.resize(n);
    out.uc_norm.resize(n);
    out.synthetic_mask.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.fhr_norm[i] = normalize_fhr(out.fhr[i]);
        out.uc_norm[i] = normalize_uc(out.uc[i]);
        out.synthetic_mask[i] = fhr_mask[i] || uc_mask[i];
    }
    return out;
}

void save_clean_recording(const CleanRecording& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write cleaned recording " + path);
    out << "t_sec,fhr_bpm,uc_mmhg,fhr_norm,uc_norm,synthetic\n";
    char buf[192];
    for (std::size_t i = 0; i < rec.length(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.17g,%.17g,%.17g,%.17g,%d\n",
                      static_cast<double>(i) / rec.sample_rate_hz, rec.fhr[i], rec.uc[i],
                      rec.fhr_norm[i], rec.uc_norm[i], rec.synthetic_mask[i] ? 1 : 0);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed for cleaned recording " + path);
}

CleanRecording load_clean_recording(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cleaned recording " + path);

    CleanRecording rec;
    rec.id = std::filesystem::path(path).stem().string();

    auto fail = [&path](std::size_t line, const std::string& what) -> void {
        throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
    };
    auto number = [&](const std::string& s, std::size_t line) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            fail(line, "malformed number '" + s + "'");
        }
        return v;
    };

    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) fail(1, "empty file");
    ++lineno;
    if (line.find("t_sec,fhr_bpm,uc_mmhg,fhr_norm,uc_norm,synthetic") != 0) {
        fail(lineno, "expected cleaned-recording header");
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (fields.size() != 6) fail(lineno, "inconsistent column count");
        rec.fhr.push_back(number(fields[1], lineno));
        rec.uc.push_back(number(fields[2], lineno));
        rec.fhr_norm.push_back(number(fields[3], lineno));
        rec.uc_norm.push_back(number(fields[4], lineno));
        rec.synthetic_mask.push_back(number(fields[5], lineno) != 0.0);
    }
    if (rec.fhr.empty()) fail(lineno, "no data rows");
    return rec;
}

}  // namespace ctgfm::preprocess
