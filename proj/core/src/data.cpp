#include "ctgfm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ctgfm/rng.hpp"

namespace ctgfm::data {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool is_missing_token(const std::string& s) {
    if (s.empty()) return true;
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return lower == "nan";
}

double parse_number(const std::string& s, const std::string& path, std::size_t line) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        parse_fail(path, line, "malformed number '" + s + "'");
    }
    return v;
}

}  // namespace

std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    throw std::logic_error("split_name: bad enum");
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "validation") return Split::validation;
    if (name == "test") return Split::test;
    throw std::runtime_error("unknown split name '" + name + "'");
}

Recording load_recording(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open recording file " + path);

    Recording rec;
    rec.id = std::filesystem::path(path).stem().string();

    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
    ++lineno;
    {
        auto fields = split_fields(trim(line));
        if (fields.size() < 3 || trim(fields[0]) != "t_sec" || trim(fields[1]) != "fhr_bpm" ||
            trim(fields[2]) != "uc_mmhg") {
            parse_fail(path, lineno, "expected header t_sec,fhr_bpm,uc_mmhg");
        }
    }

    double prev_t = 0.0;
    bool have_prev = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        auto fields = split_fields(t);
        if (fields.size() != 3) parse_fail(path, lineno, "inconsistent column count");

        const double tv = parse_number(trim(fields[0]), path, lineno);
        if (have_prev) {
            if (tv <= prev_t) parse_fail(path, lineno, "non-monotone time column");
            if (std::abs(tv - prev_t - 0.25) > 1e-6) {
                parse_fail(path, lineno, "time column not at 0.25 s spacing");
            }
        }
        prev_t = tv;
        have_prev = true;

        const std::string fhr_s = trim(fields[1]);
        const std::string uc_s = trim(fields[2]);

        if (is_missing_token(fhr_s)) {
            rec.fhr.push_back(0.0);
            rec.fhr_valid.push_back(false);
        } else {
            const double v = parse_number(fhr_s, path, lineno);
            // 0 encodes missing in the FHR channel
            rec.fhr.push_back(v);
            rec.fhr_valid.push_back(v != 0.0 && std::isfinite(v));
        }
        if (is_missing_token(uc_s)) {
            rec.uc.push_back(0.0);
            rec.uc_valid.push_back(false);
        } else {
            const double v = parse_number(uc_s, path, lineno);
            rec.uc.push_back(v);
            rec.uc_valid.push_back(std::isfinite(v));
        }
    }
    if (rec.fhr.empty()) parse_fail(path, lineno, "no data rows");
    return rec;
}

void save_recording(const Recording& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write recording file " + path);
    out << "t_sec,fhr_bpm,uc_mmhg\n";
    char buf[128];
    for (std::size_t i = 0; i < rec.length(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.2f,",
                      static_cast<double>(i) / rec.sample_rate_hz);
        out << buf;
        if (rec.fhr_valid[i]) {
            std::snprintf(buf, sizeof(buf), "%.17g", rec.fhr[i]);
            out << buf;
        }
        out << ',';
        if (rec.uc_valid[i]) {
            std::snprintf(buf, sizeof(buf), "%.17g", rec.uc[i]);
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for recording file " + path);
}

Label acidemia_label(const ClinicalMetadata& meta) {
    if (std::isnan(meta.ph)) {
        throw std::runtime_error("acidemia_label: missing ph for id " + meta.id);
    }
    return Label{meta.id, meta.ph < 7.15};
}

std::vector<Label> acidemia_labels(const std::vector<ClinicalMetadata>& metas) {
    std::vector<Label> out;
    out.reserve(metas.size());
    for (const auto& m : metas) out.push_back(acidemia_label(m));
    return out;
}

SplitAssignment stratified_split(const std::vector<Label>& labels,
                                 const SplitSizes& sizes, std::uint64_t seed) {
    std::vector<std::string> pos, neg;
    for (const auto& l : labels) (l.positive ? pos : neg).push_back(l.id);

    const std::size_t total = sizes.train_n + sizes.validation_n + sizes.test_n;
    const std::size_t total_pos = sizes.train_pos + sizes.validation_pos + sizes.test_pos;
    if (total != labels.size()) {
        throw std::runtime_error("stratified_split: split sizes sum to " + std::to_string(total) +
                                 " but there are " + std::to_string(labels.size()) + " labels");
    }
    if (total_pos != pos.size()) {
        throw std::runtime_error("stratified_split: requested " + std::to_string(total_pos) +
                                 " positives but " + std::to_string(pos.size()) + " exist");
    }
    if (sizes.train_pos > sizes.train_n || sizes.validation_pos > sizes.validation_n ||
        sizes.test_pos > sizes.test_n) {
        throw std::runtime_error("stratified_split: positive quota exceeds split size");
    }

    Rng pos_rng(derive_seed(seed, "stratified-split-pos"));
    Rng neg_rng(derive_seed(seed, "stratified-split-neg"));
    pos_rng.shuffle(pos);
    neg_rng.shuffle(neg);

    SplitAssignment out;
    out.seed = seed;
    auto deal = [&out](const std::vector<std::string>& ids, std::size_t a, std::size_t b) {
        std::size_t i = 0;
        for (; i < a; ++i) out.assignment[ids[i]] = Split::train;
        for (; i < a + b; ++i) out.assignment[ids[i]] = Split::validation;
        for (; i < ids.size(); ++i) out.assignment[ids[i]] = Split::test;
    };
    deal(pos, sizes.train_pos, sizes.validation_pos);
    deal(neg, sizes.train_n - sizes.train_pos, sizes.validation_n - sizes.validation_pos);
    return out;
}

SubgroupCriterion parse_criterion(const std::string& name) {
    if (name == "vaginal") return SubgroupCriterion::vaginal;
    if (name == "cephalic") return SubgroupCriterion::cephalic;
    if (name == "no-arrest" || name == "no_arrest") return SubgroupCriterion::no_arrest;
    throw std::runtime_error("unknown subgroup criterion '" + name + "'");
}

std::vector<std::string> filter_subgroup(
    const std::vector<ClinicalMetadata>& metas,
    const std::vector<SubgroupCriterion>& criteria) {
    std::vector<std::string> out;
    for (const auto& m : metas) {
        bool keep = true;
        for (auto c : criteria) {
            switch (c) {
                case SubgroupCriterion::vaginal:
                    keep = keep && m.delivery_type == DeliveryType::vaginal;
                    break;
                case SubgroupCriterion::cephalic:
                    keep = keep && m.presentation == Presentation::cephalic;
                    break;
                case SubgroupCriterion::no_arrest:
                    keep = keep && !m.labor_arrest;
                    break;
            }
        }
        if (keep) out.push_back(m.id);
    }
    return out;
}

namespace {

ClinicalMetadata meta_from_json(const json& j) {
    ClinicalMetadata m;
    m.id = j.at("id").get<std::string>();
    m.ph = j.at("ph").get<double>();
    const std::string dt = j.at("delivery_type").get<std::string>();
    if (dt == "vaginal") m.delivery_type = DeliveryType::vaginal;
    else if (dt == "cesarean") m.delivery_type = DeliveryType::cesarean;
    else throw std::runtime_error("metadata id " + m.id + ": bad delivery_type '" + dt + "'");
    const std::string pr = j.at("presentation").get<std::string>();
    if (pr == "cephalic") m.presentation = Presentation::cephalic;
    else if (pr == "other") m.presentation = Presentation::other;
    else throw std::runtime_error("metadata id " + m.id + ": bad presentation '" + pr + "'");
    m.labor_arrest = j.at("labor_arrest").get<bool>();
    m.induced = j.at("induced").get<bool>();
    m.apgar1 = j.at("apgar1").get<int>();
    m.apgar5 = j.at("apgar5").get<int>();
    m.gestational_age_weeks = j.at("gestational_age_weeks").get<double>();
    m.birth_weight_g = j.at("birth_weight_g").get<double>();

    if (!(m.ph >= 6.5 && m.ph <= 7.6)) {
        throw std::runtime_error("metadata id " + m.id + ": ph out of [6.5, 7.6]");
    }
    if (m.apgar1 < 0 || m.apgar1 > 10 || m.apgar5 < 0 || m.apgar5 > 10) {
        throw std::runtime_error("metadata id " + m.id + ": apgar out of [0, 10]");
    }
    return m;
}

json meta_to_json(const ClinicalMetadata& m) {
    json j;
    j["id"] = m.id;
    j["ph"] = m.ph;
    j["delivery_type"] = m.delivery_type == DeliveryType::vaginal ? "vaginal" : "cesarean";
    j["presentation"] = m.presentation == Presentation::cephalic ? "cephalic" : "other";
    j["labor_arrest"] = m.labor_arrest;
    j["induced"] = m.induced;
    j["apgar1"] = m.apgar1;
    j["apgar5"] = m.apgar5;
    j["gestational_age_weeks"] = m.gestational_age_weeks;
    j["birth_weight_g"] = m.birth_weight_g;
    return j;
}

}  // namespace

std::vector<ClinicalMetadata> load_metadata(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open metadata file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    if (!doc.is_array()) throw std::runtime_error(path + ": expected a JSON array");

    std::vector<ClinicalMetadata> out;
    out.reserve(doc.size());
    for (const auto& j : doc) out.push_back(meta_from_json(j));

    std::vector<std::string> ids;
    for (const auto& m : out) ids.push_back(m.id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw std::runtime_error(path + ": duplicate recording id");
    }
    return out;
}

void save_metadata(const std::vector<ClinicalMetadata>& metas, const std::string& path) {
    json doc = json::array();
    for (const auto& m : metas) doc.push_back(meta_to_json(m));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metadata file " + path);
    out << doc.dump(2) << "\n";
}

SplitAssignment load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open split file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    if (!doc.is_object()) throw std::runtime_error(path + ": expected a JSON object");

    SplitAssignment out;
    if (!doc.contains("seed")) throw std::runtime_error(path + ": missing seed field");
    out.seed = doc.at("seed").get<std::uint64_t>();
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.key() == "seed") continue;
        out.assignment[it.key()] = parse_split(it.value().get<std::string>());
    }
    return out;
}

void save_split(const SplitAssignment& split, const std::string& path) {
    json doc;
    doc["seed"] = split.seed;
    for (const auto& [id, s] : split.assignment) doc[id] = split_name(s);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write split file " + path);
    out << doc.dump(2) << "\n";
}

}  // namespace ctgfm::data
