#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ctgfm/metrics.hpp"
#include "ctgfm/rng.hpp"
#include "doctest.h"

using namespace ctgfm;
using namespace ctgfm::metrics;
namespace fs = std::filesystem;

namespace {

data::ClinicalMetadata meta(const std::string& id, bool positive, data::DeliveryType d,
                            data::Presentation pres, bool arrest) {
    data::ClinicalMetadata m;
    m.id = id;
    m.ph = positive ? 7.0 : 7.3;
    m.delivery_type = d;
    m.presentation = pres;
    m.labor_arrest = arrest;
    return m;
}

// 55 records jointly realizing the six evaluation subgroups with known sizes:
// 46 vaginal+cephalic (9 positive, 3 arrested of which 2 positive),
// 4 vaginal-only (1 positive arrested, 2 arrested), 4 cephalic-only
// (1 positive, 2 arrested, positive not arrested), 1 neither (arrested).
std::vector<data::ClinicalMetadata> subgroup_fixture() {
    using data::DeliveryType;
    using data::Presentation;
    std::vector<data::ClinicalMetadata> metas;
    int k = 0;
    auto push = [&](bool pos, DeliveryType d, Presentation p, bool arrest) {
        char id[16];
        std::snprintf(id, sizeof(id), "g%03d", k++);
        metas.push_back(meta(id, pos, d, p, arrest));
    };
    for (int i = 0; i < 46; ++i) {
        const bool pos = i < 9;
        const bool arrest = i == 0 || i == 1 || i == 45;  // two positive, one negative
        push(pos, DeliveryType::vaginal, Presentation::cephalic, arrest);
    }
    for (int i = 0; i < 4; ++i) {
        const bool pos = i == 0;
        const bool arrest = i < 2;  // the positive one is arrested
        push(pos, DeliveryType::vaginal, Presentation::other, arrest);
    }
    for (int i = 0; i < 4; ++i) {
        const bool pos = i == 0;
        const bool arrest = i >= 2;  // the positive one is not arrested
        push(pos, DeliveryType::cesarean, Presentation::cephalic, arrest);
    }
    push(false, DeliveryType::cesarean, Presentation::other, true);
    return metas;
}

}  // namespace

TEST_CASE("worked AUC example with a tie across classes") {
    const double a = auc({true, false, true, false}, {0.8, 0.8, 0.3, 0.1});
    CHECK(a == doctest::Approx(0.625).epsilon(1e-15));
}

TEST_CASE("perfect and inverted rankings") {
    CHECK(auc({false, false, true, true}, {0.1, 0.2, 0.8, 0.9}) == 1.0);
    CHECK(auc({true, true, false, false}, {0.1, 0.2, 0.8, 0.9}) == 0.0);
    CHECK(auc({true, false}, {0.5, 0.5}) == 0.5);
}

TEST_CASE("rank-sum equals brute force on random tied instances") {
    Rng rng(404);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.integer(199);
        std::vector<bool> labels(n);
        std::vector<double> scores(n);
        bool any_pos = false, any_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.bernoulli(0.4);
            any_pos = any_pos || labels[i];
            any_neg = any_neg || !labels[i];
            // a coarse grid forces plenty of ties
            scores[i] = static_cast<double>(rng.integer(12)) / 11.0;
        }
        if (!any_pos) labels[0] = true;
        if (!any_neg) labels[n - 1] = false;
        const double fast = auc(labels, scores);
        const double slow = auc_bruteforce(labels, scores);
        CHECK(std::abs(fast - slow) < 1e-12);
    }
}

TEST_CASE("AUC is invariant under strictly increasing transforms") {
    Rng rng(405);
    std::vector<bool> labels;
    std::vector<double> scores, transformed;
    for (int i = 0; i < 100; ++i) {
        labels.push_back(rng.bernoulli(0.3));
        const double s = rng.uniform();
        scores.push_back(s);
        transformed.push_back(std::exp(3.0 * s) - 1.0);
    }
    labels[0] = true;
    labels[1] = false;
    CHECK(auc(labels, scores) == doctest::Approx(auc(labels, transformed)).epsilon(1e-15));
}

TEST_CASE("flipping labels complements the AUC") {
    Rng rng(406);
    std::vector<bool> labels;
    std::vector<double> scores;
    for (int i = 0; i < 64; ++i) {
        labels.push_back(i % 3 == 0);
        scores.push_back(rng.uniform());
    }
    std::vector<bool> flipped;
    for (bool b : labels) flipped.push_back(!b);
    CHECK(auc(labels, scores) + auc(flipped, scores) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single-class AUC is undefined") {
    CHECK_THROWS(auc({true, true}, {0.1, 0.2}));
    CHECK_THROWS(auc({false}, {0.1}));
    CHECK_THROWS(auc({}, {}));
    CHECK_THROWS(auc({true, false}, {0.1}));  // length mismatch
}

TEST_CASE("accuracy uses a strict threshold") {
    // 0.5 is not > 0.5, so the second example counts as a negative call
    CHECK(accuracy({true, true, false}, {0.9, 0.5, 0.2}) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(accuracy({true, false}, {0.8, 0.3}, 0.25) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS(accuracy({}, {}));
}

TEST_CASE("subgroup report reproduces the fixture cross-tabulation") {
    const auto metas = subgroup_fixture();
    std::map<std::string, double> scores;
    std::map<std::string, bool> labels;
    for (const auto& m : metas) {
        const bool pos = m.ph < 7.15;
        labels[m.id] = pos;
        scores[m.id] = pos ? 0.9 : 0.1;  // perfectly separating scores
    }
    const EvalReport report = evaluate_subgroups(scores, labels, metas);
    REQUIRE(report.rows.size() == 6);

    const std::vector<std::string> names = {
        "All test cases",     "Vaginal delivery",
        "Cephalic presentation", "Vaginal + Cephalic",
        "No arrest of labor", "Vaginal + Cephalic + No arrest"};
    const std::vector<std::size_t> expect_n = {55, 50, 50, 46, 47, 43};
    const std::vector<std::size_t> expect_pos = {11, 10, 10, 9, 8, 7};
    for (std::size_t r = 0; r < 6; ++r) {
        CHECK(report.rows[r].name == names[r]);
        CHECK(report.rows[r].n == expect_n[r]);
        CHECK(report.rows[r].positives == expect_pos[r]);
        CHECK(report.rows[r].prevalence ==
              doctest::Approx(static_cast<double>(expect_pos[r]) /
                              static_cast<double>(expect_n[r]))
                  .epsilon(1e-12));
        REQUIRE(report.rows[r].auc.has_value());
        CHECK(*report.rows[r].auc == 1.0);
        REQUIRE(report.rows[r].accuracy.has_value());
        CHECK(*report.rows[r].accuracy == 1.0);
    }
}

TEST_CASE("single-class subgroups report an undefined AUC") {
    std::vector<data::ClinicalMetadata> metas = {
        meta("a", true, data::DeliveryType::vaginal, data::Presentation::cephalic, true),
        meta("b", false, data::DeliveryType::vaginal, data::Presentation::cephalic, false),
        meta("c", false, data::DeliveryType::vaginal, data::Presentation::cephalic, false),
    };
    std::map<std::string, double> scores{{"a", 0.9}, {"b", 0.2}, {"c", 0.3}};
    std::map<std::string, bool> labels{{"a", true}, {"b", false}, {"c", false}};
    const EvalReport report = evaluate_subgroups(scores, labels, metas);
    // the only positive is arrested, so "No arrest of labor" is single-class
    CHECK_FALSE(report.rows[4].auc.has_value());
    CHECK(report.rows[4].accuracy.has_value());
    CHECK(report.rows[0].auc.has_value());
}

TEST_CASE("missing scores are an error") {
    std::vector<data::ClinicalMetadata> metas = {
        meta("a", true, data::DeliveryType::vaginal, data::Presentation::cephalic, false)};
    std::map<std::string, bool> labels{{"a", true}};
    CHECK_THROWS(evaluate_subgroups({}, labels, metas));
    std::map<std::string, double> scores{{"a", 0.5}};
    CHECK_THROWS(evaluate_subgroups(scores, {}, metas));
}

TEST_CASE("report CSV carries undefined cells verbatim") {
    EvalReport report;
    EvalRow row;
    row.name = "All test cases";
    row.n = 3;
    row.positives = 1;
    row.prevalence = 1.0 / 3.0;
    row.accuracy = 0.75;
    report.rows.push_back(row);  // auc left undefined

    const fs::path p = fs::temp_directory_path() / "ctgfm_report.csv";
    save_report_csv(report, p.string());
    std::ifstream in(p);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    CHECK(header == "subgroup,n,positives,prevalence,auc,accuracy");
    CHECK(line.find("All test cases,3,1,") == 0);
    CHECK(line.find("undefined") != std::string::npos);
    fs::remove(p);
}

TEST_CASE("text report is aligned and complete") {
    const auto metas = subgroup_fixture();
    std::map<std::string, double> scores;
    std::map<std::string, bool> labels;
    for (const auto& m : metas) {
        labels[m.id] = m.ph < 7.15;
        scores[m.id] = labels[m.id] ? 0.8 : 0.2;
    }
    const std::string text = format_report(evaluate_subgroups(scores, labels, metas));
    CHECK(text.find("All test cases") != std::string::npos);
    CHECK(text.find("Vaginal + Cephalic + No arrest") != std::string::npos);
    CHECK(text.find("AUC") != std::string::npos);
}
