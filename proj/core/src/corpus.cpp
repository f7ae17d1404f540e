#include "cliniqa/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cliniqa/text.hpp"

namespace cliniqa {

using json = nlohmann::json;

namespace {

std::optional<RelevanceLabel> label_from_string(std::string_view s) {
    if (s == "essential") return RelevanceLabel::Essential;
    if (s == "supplementary") return RelevanceLabel::Supplementary;
    if (s == "not-relevant") return RelevanceLabel::NotRelevant;
    return std::nullopt;
}

[[noreturn]] void fail(const std::string& msg) { throw CorpusError(msg); }

CaseStudy parse_case(const json& jc, std::size_t position, Split split) {
    if (!jc.is_object()) fail("case at position " + std::to_string(position) + " is not an object");
    CaseStudy cs;
    try {
        cs.case_id = jc.at("case_id").get<std::string>();
        cs.patient_question = jc.at("patient_question").get<std::string>();
        cs.clinician_question = jc.at("clinician_question").get<std::string>();
    } catch (const json::exception& e) {
        fail("case at position " + std::to_string(position) + ": " + e.what());
    }
    const std::string where = "case \"" + cs.case_id + "\"";
    if (cs.case_id.empty()) fail("case at position " + std::to_string(position) + ": empty case_id");
    if (cs.patient_question.empty()) fail(where + ": empty patient_question");
    if (cs.clinician_question.empty()) fail(where + ": empty clinician_question");

    const auto it = jc.find("sentences");
    if (it == jc.end() || !it->is_array() || it->empty())
        fail(where + ": needs a non-empty sentences array");

    int expected_id = 1;
    for (const auto& js : *it) {
        NoteSentence s;
        try {
            s.id = js.at("id").get<int>();
            s.text = js.at("text").get<std::string>();
        } catch (const json::exception& e) {
            fail(where + ", sentence " + std::to_string(expected_id) + ": " + e.what());
        }
        if (s.id != expected_id)
            fail(where + ": non-contiguous sentence ids (expected " +
                 std::to_string(expected_id) + ", found " + std::to_string(s.id) + ")");
        if (s.text.empty()) fail(where + ", sentence " + std::to_string(s.id) + ": empty text");

        const auto jl = js.find("label");
        if (jl == js.end() || jl->is_null()) {
            if (split != Split::Test)
                fail(where + ", sentence " + std::to_string(s.id) +
                     ": unlabeled sentence outside the test split");
            s.label = RelevanceLabel::Unlabeled;
        } else {
            const auto name = jl->get<std::string>();
            const auto label = label_from_string(name);
            if (!label)
                fail(where + ", sentence " + std::to_string(s.id) + ": unknown label \"" + name + "\"");
            s.label = *label;
        }
        cs.sentences.push_back(std::move(s));
        ++expected_id;
    }
    return cs;
}

double quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted.front();
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

DistributionSummary summarize(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    DistributionSummary d;
    d.min = values.front();
    d.max = values.back();
    double sum = 0;
    for (double v : values) sum += v;
    d.mean = sum / static_cast<double>(values.size());
    d.median = quantile(values, 0.5);
    d.q1 = quantile(values, 0.25);
    d.q3 = quantile(values, 0.75);
    return d;
}

void append_summary_csv(std::string& out, std::string_view name, const DistributionSummary& d) {
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%s,%g,%g,%g,%g,%g,%g\n", std::string(name).c_str(),
                  d.min, d.q1, d.median, d.mean, d.q3, d.max);
    out += buf;
}

} // namespace

std::string_view to_string(RelevanceLabel label) {
    switch (label) {
        case RelevanceLabel::Essential: return "essential";
        case RelevanceLabel::Supplementary: return "supplementary";
        case RelevanceLabel::NotRelevant: return "not-relevant";
        case RelevanceLabel::Unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

const NoteSentence* CaseStudy::find_sentence(int sentence_id) const {
    if (sentence_id < 1 || static_cast<std::size_t>(sentence_id) > sentences.size()) return nullptr;
    return &sentences[static_cast<std::size_t>(sentence_id) - 1];
}

const CaseStudy* Dataset::find_case(std::string_view case_id) const {
    for (const auto& c : cases)
        if (c.case_id == case_id) return &c;
    return nullptr;
}

Dataset parse_dataset(std::string_view json_text) {
    json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded()) fail("malformed dataset file: not valid JSON");
    if (!root.is_object()) fail("malformed dataset file: top level must be an object");

    Dataset ds;
    const auto split = root.value("split", std::string{});
    if (split == "dev") {
        ds.split = Split::Dev;
    } else if (split == "test") {
        ds.split = Split::Test;
    } else {
        fail("malformed dataset file: split must be \"dev\" or \"test\"");
    }

    const auto it = root.find("cases");
    if (it == root.end() || !it->is_array()) fail("malformed dataset file: missing cases array");

    std::set<std::string> seen;
    std::size_t position = 0;
    for (const auto& jc : *it) {
        CaseStudy cs = parse_case(jc, position, ds.split);
        if (!seen.insert(cs.case_id).second)
            fail("duplicate case_id \"" + cs.case_id + "\" at position " + std::to_string(position));
        ds.cases.push_back(std::move(cs));
        ++position;
    }
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open dataset file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str());
}

std::string serialize_dataset(const Dataset& dataset) {
    json root;
    root["split"] = dataset.split == Split::Dev ? "dev" : "test";
    root["cases"] = json::array();
    for (const auto& cs : dataset.cases) {
        json jc;
        jc["case_id"] = cs.case_id;
        jc["patient_question"] = cs.patient_question;
        jc["clinician_question"] = cs.clinician_question;
        jc["sentences"] = json::array();
        for (const auto& s : cs.sentences) {
            json js;
            js["id"] = s.id;
            js["text"] = s.text;
            if (s.label == RelevanceLabel::Unlabeled) {
                js["label"] = nullptr;
            } else {
                js["label"] = std::string(to_string(s.label));
            }
            jc["sentences"].push_back(std::move(js));
        }
        root["cases"].push_back(std::move(jc));
    }
    return root.dump(2) + "\n";
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write dataset file: " + path.string());
    out << serialize_dataset(dataset);
}

std::string_view to_string(QueryMode mode) {
    switch (mode) {
        case QueryMode::PatientOnly: return "patient";
        case QueryMode::ClinicianOnly: return "clinician";
        case QueryMode::Both: return "both";
    }
    return "both";
}

std::optional<QueryMode> query_mode_from_string(std::string_view name) {
    if (name == "patient") return QueryMode::PatientOnly;
    if (name == "clinician") return QueryMode::ClinicianOnly;
    if (name == "both") return QueryMode::Both;
    return std::nullopt;
}

std::string build_query(const CaseStudy& cs, QueryMode mode) {
    switch (mode) {
        case QueryMode::PatientOnly: return cs.patient_question;
        case QueryMode::ClinicianOnly: return cs.clinician_question;
        case QueryMode::Both: return cs.patient_question + "\n" + cs.clinician_question;
    }
    return cs.patient_question + "\n" + cs.clinician_question;
}

StatsReport corpus_stats(const std::vector<CaseStudy>& cases) {
    if (cases.empty()) fail("corpus_stats: empty case list");
    StatsReport report;
    std::vector<double> counts;
    std::vector<double> lengths;
    for (const auto& cs : cases) {
        report.per_case_counts.emplace_back(cs.case_id, cs.sentences.size());
        counts.push_back(static_cast<double>(cs.sentences.size()));
        for (const auto& s : cs.sentences)
            lengths.push_back(static_cast<double>(text::word_count(s.text)));
    }
    report.sentence_counts = summarize(std::move(counts));
    report.sentence_lengths = summarize(std::move(lengths));
    return report;
}

std::string stats_to_csv(const StatsReport& report) {
    std::string out = "case_id,sentence_count\n";
    for (const auto& [id, n] : report.per_case_counts)
        out += id + "," + std::to_string(n) + "\n";
    out += "\nmetric,min,q1,median,mean,q3,max\n";
    append_summary_csv(out, "sentences_per_case", report.sentence_counts);
    append_summary_csv(out, "tokens_per_sentence", report.sentence_lengths);
    return out;
}

} // namespace cliniqa
