#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctgfm/data.hpp"

namespace ctgfm::metrics {

// Mann-Whitney AUC via midranks: the probability a random positive outscores
// a random negative, ties counting one half. Both classes must be present.
double auc(const std::vector<bool>& labels, const std::vector<double>& scores);

// Same statistic by direct enumeration of all (positive, negative) pairs.
// Kept as an independent route for cross-checking the rank-sum form.
double auc_bruteforce(const std::vector<bool>& labels, const std::vector<double>& scores);

// Fraction of examples where (score > threshold) matches the label.
double accuracy(const std::vector<bool>& labels, const std::vector<double>& scores,
                double threshold = 0.5);

struct EvalRow {
    std::string name;
    std::size_t n = 0;
    std::size_t positives = 0;
    double prevalence = 0.0;
    std::optional<double> auc;       // empty when only one class is present
    std::optional<double> accuracy;  // empty when the subgroup is empty
};

struct EvalReport {
    std::vector<EvalRow> rows;
};

// One row per evaluation subgroup: all, vaginal, cephalic, vaginal+cephalic,
// no-arrest, vaginal+cephalic+no-arrest. Every recording in `metas` needs a
// score and a label; single-class subgroups report an undefined AUC.
EvalReport evaluate_subgroups(const std::map<std::string, double>& scores,
                              const std::map<std::string, bool>& labels,
                              const std::vector<data::ClinicalMetadata>& metas);

void save_report_csv(const EvalReport& report, const std::string& path);
std::string format_report(const EvalReport& report);  // aligned text table

}  // namespace ctgfm::metrics
