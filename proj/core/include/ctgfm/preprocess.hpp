#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctgfm/data.hpp"

namespace ctgfm::preprocess {

// A recording after cleaning: gap-free physical channels, their normalized
// counterparts, and a mask marking every sample that was filled in rather
// than measured (on either channel).
struct CleanRecording {
    std::string id;
    int sample_rate_hz = 4;
    std::vector<double> fhr;       // bpm, gaps filled
    std::vector<double> uc;        // mmHg, gaps filled
    std::vector<double> fhr_norm;  // clip(fhr,50,210)/160
    std::vector<double> uc_norm;   // clip(uc,0,100)/100
    std::vector<bool> synthetic_mask;
    std::optional<std::size_t> stage2_start_index;

    std::size_t length() const { return fhr.size(); }
};

// Marks FHR samples outside [50, 220] bpm invalid. Boundaries are valid.
std::vector<bool> remove_implausible_fhr(const std::vector<double>& fhr,
                                         std::vector<bool> valid);

// Invalidates transient spikes: a valid sample differing from the previous
// valid level by more than jump_bpm, when the trace returns to within
// jump_bpm of that level within the next 5 samples. Steps that do not
// return are treated as genuine level shifts and kept.
std::vector<bool> remove_spikes(const std::vector<double>& fhr,
                                std::vector<bool> valid, double jump_bpm = 25.0);

// Marks sensor-loss plateaus in the UC channel invalid: every trailing
// 120-sample window whose standard deviation is below 1e-5, whose samples
// are all valid on entry, and whose values are all below 80 mmHg. Inputs
// shorter than 120 samples are returned unchanged.
std::vector<bool> detect_flat_uc(const std::vector<double>& uc,
                                 std::vector<bool> valid);

// Fills invalid samples: interior gaps by linear interpolation between the
// nearest valid neighbours, leading/trailing gaps by constant extension.
// Returns the filled series and a mask of filled positions. Throws if no
// sample is valid.
std::pair<std::vector<double>, std::vector<bool>> interpolate_gaps(
    const std::vector<double>& series, const std::vector<bool>& valid);

double normalize_fhr(double bpm);   // clip(bpm, 50, 210) / 160
double normalize_uc(double mmhg);   // clip(mmhg, 0, 100) / 100

// Full cleaning pipeline: implausible-FHR removal, spike removal, flat-UC
// detection, per-channel gap interpolation, normalization.
CleanRecording preprocess_pipeline(const data::Recording& rec);

// Cleaned-CSV round trip. Columns: t_sec,fhr_bpm,uc_mmhg,fhr_norm,uc_norm,
// synthetic. The synthetic column collapses the per-channel fill masks into
// one flag per row.
void save_clean_recording(const CleanRecording& rec, const std::string& path);
CleanRecording load_clean_recording(const std::string& path);

}  // namespace ctgfm::preprocess
