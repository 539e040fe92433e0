#include "ctgfm/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace ctgfm::metrics {

namespace {

void check_classes(const std::vector<bool>& labels, const std::vector<double>& scores,
                   const char* op) {
    if (labels.size() != scores.size()) {
        throw std::invalid_argument(std::string(op) + ": label/score count mismatch");
    }
    bool pos = false, neg = false;
    for (bool y : labels) (y ? pos : neg) = true;
    if (!pos || !neg) {
        throw std::runtime_error(std::string(op) + ": both classes required");
    }
}

}  // namespace

double auc(const std::vector<bool>& labels, const std::vector<double>& scores) {
    check_classes(labels, scores, "auc");
    const std::size_t n = labels.size();

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midranks over tie groups
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
        i = j + 1;
    }

    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[k]) {
            pos_rank_sum += rank[k];
            ++n_pos;
        }
    }
    const std::size_t n_neg = n - n_pos;
    const double u = pos_rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc_bruteforce(const std::vector<bool>& labels, const std::vector<double>& scores) {
    check_classes(labels, scores, "auc");
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t p = 0; p < labels.size(); ++p) {
        if (!labels[p]) continue;
        for (std::size_t q = 0; q < labels.size(); ++q) {
            if (labels[q]) continue;
            if (scores[p] > scores[q]) total += 1.0;
            else if (scores[p] == scores[q]) total += 0.5;
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

double accuracy(const std::vector<bool>& labels, const std::vector<double>& scores,
                double threshold) {
    if (labels.size() != scores.size()) {
        throw std::invalid_argument("accuracy: label/score count mismatch");
    }
    if (labels.empty()) throw std::runtime_error("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if ((scores[i] > threshold) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

EvalReport evaluate_subgroups(const std::map<std::string, double>& scores,
                              const std::map<std::string, bool>& labels,
                              const std::vector<data::ClinicalMetadata>& metas) {
    using data::SubgroupCriterion;
    struct Def {
        const char* name;
        std::vector<SubgroupCriterion> criteria;
    };
    const std::vector<Def> defs = {
        {"All test cases", {}},
        {"Vaginal delivery", {SubgroupCriterion::vaginal}},
        {"Cephalic presentation", {SubgroupCriterion::cephalic}},
        {"Vaginal + Cephalic", {SubgroupCriterion::vaginal, SubgroupCriterion::cephalic}},
        {"No arrest of labor", {SubgroupCriterion::no_arrest}},
        {"Vaginal + Cephalic + No arrest",
         {SubgroupCriterion::vaginal, SubgroupCriterion::cephalic,
          SubgroupCriterion::no_arrest}},
    };

    EvalReport report;
    for (const auto& def : defs) {
        const std::vector<std::string> ids = data::filter_subgroup(metas, def.criteria);
        EvalRow row;
        row.name = def.name;
        row.n = ids.size();

        std::vector<bool> y;
        std::vector<double> s;
        for (const auto& id : ids) {
            auto sit = scores.find(id);
            if (sit == scores.end()) {
                throw std::runtime_error("evaluate_subgroups: missing score for id " + id);
            }
            auto lit = labels.find(id);
            if (lit == labels.end()) {
                throw std::runtime_error("evaluate_subgroups: missing label for id " + id);
            }
            s.push_back(sit->second);
            y.push_back(lit->second);
            if (lit->second) ++row.positives;
        }
        row.prevalence = row.n ? static_cast<double>(row.positives) / row.n : 0.0;
        bool pos = false, neg = false;
        for (bool v : y) (v ? pos : neg) = true;
        if (pos && neg) row.auc = auc(y, s);
        if (!y.empty()) row.accuracy = accuracy(y, s);
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

std::string cell(const std::optional<double>& v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", *v);
    return buf;
}

}  // namespace

void save_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report " + path);
    out << "subgroup,n,positives,prevalence,auc,accuracy\n";
    char buf[64];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.4f", r.n, r.positives, r.prevalence);
        out << r.name << ',' << buf << ',' << cell(r.auc) << ',' << cell(r.accuracy) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for report " + path);
}

std::string format_report(const EvalReport& report) {
    std::size_t name_w = 8;
    for (const auto& r : report.rows) name_w = std::max(name_w, r.name.size());

    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-*s  %5s  %9s  %10s  %9s  %9s\n",
                  static_cast<int>(name_w), "Subgroup", "n", "Positives", "Prevalence",
                  "AUC", "Accuracy");
    out += buf;
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%-*s  %5zu  %9zu  %9.1f%%  %9s  %9s\n",
                      static_cast<int>(name_w), r.name.c_str(), r.n, r.positives,
                      100.0 * r.prevalence, cell(r.auc).c_str(), cell(r.accuracy).c_str());
        out += buf;
    }
    return out;
}

}  // namespace ctgfm::metrics
