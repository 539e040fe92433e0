#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctgfm::data {

/// Paired 4 Hz FHR/UC series with per-sample validity flags.
struct Recording {
    std::string id;
    double sample_rate_hz = 4.0;
    std::vector<double> fhr;       // beats per minute
    std::vector<double> uc;        // mmHg
    std::vector<bool> fhr_valid;
    std::vector<bool> uc_valid;
    std::optional<std::size_t> stage2_start_index;

    std::size_t length() const { return fhr.size(); }
};

enum class DeliveryType { vaginal, cesarean };
enum class Presentation { cephalic, other };

struct ClinicalMetadata {
    std::string id;
    double ph = 0.0;  // umbilical artery pH
    DeliveryType delivery_type = DeliveryType::vaginal;
    Presentation presentation = Presentation::cephalic;
    bool labor_arrest = false;
    bool induced = false;
    int apgar1 = 9;
    int apgar5 = 9;
    double gestational_age_weeks = 40.0;
    double birth_weight_g = 3400.0;
};

struct Label {
    std::string id;
    bool positive = false;  // acidemia
};

enum class Split { train, validation, test };

std::string split_name(Split s);
Split parse_split(const std::string& name);

struct SplitAssignment {
    std::map<std::string, Split> assignment;
    std::uint64_t seed = 0;
};

/// Per-split totals and positive-class quotas for stratified_split.
struct SplitSizes {
    std::size_t train_n = 0, train_pos = 0;
    std::size_t validation_n = 0, validation_pos = 0;
    std::size_t test_n = 0, test_pos = 0;
};

/// Parses the recording CSV format: header `t_sec,fhr_bpm,uc_mmhg`, rows at
/// 0.25 s spacing. Empty cell or `nan` means missing; in the FHR column the
/// value 0 also means missing (CTU-UHB convention). Malformed rows,
/// inconsistent column counts, and non-monotone time values raise
/// std::runtime_error naming the line number.
Recording load_recording(const std::string& path);

/// Writes the recording CSV format. Invalid samples become empty cells.
void save_recording(const Recording& rec, const std::string& path);

/// positive ⇔ ph < 7.15 (strict). Throws if ph is NaN.
Label acidemia_label(const ClinicalMetadata& meta);

std::vector<Label> acidemia_labels(const std::vector<ClinicalMetadata>& metas);

/// Shuffles positives and negatives independently with a seeded generator and
/// deals out the per-split quotas, so realized totals and positive counts are
/// exact. Throws on infeasible quotas.
SplitAssignment stratified_split(const std::vector<Label>& labels,
                                 const SplitSizes& sizes, std::uint64_t seed);

enum class SubgroupCriterion { vaginal, cephalic, no_arrest };

SubgroupCriterion parse_criterion(const std::string& name);

/// Ids satisfying all criteria, original order preserved. Empty criteria list
/// returns every id.
std::vector<std::string> filter_subgroup(
    const std::vector<ClinicalMetadata>& metas,
    const std::vector<SubgroupCriterion>& criteria);

// JSON file formats (External Interfaces)
std::vector<ClinicalMetadata> load_metadata(const std::string& path);
void save_metadata(const std::vector<ClinicalMetadata>& metas, const std::string& path);
SplitAssignment load_split(const std::string& path);
void save_split(const SplitAssignment& split, const std::string& path);

}  // namespace ctgfm::data
