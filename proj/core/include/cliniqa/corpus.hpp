#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cliniqa/error.hpp"

namespace cliniqa {

class CorpusError : public Error {
public:
    using Error::Error;
};

/// Per-sentence gold relevance. Test-split sentences may be Unlabeled;
/// dev-split sentences must carry one of the three labeled values.
enum class RelevanceLabel { Essential, Supplementary, NotRelevant, Unlabeled };

std::string_view to_string(RelevanceLabel label);

/// One numbered sentence of a clinical note excerpt.
struct NoteSentence {
    int id = 0; // 1-based, as printed in the note
    std::string text;
    RelevanceLabel label = RelevanceLabel::Unlabeled;

    bool operator==(const NoteSentence&) const = default;
};

/// One unit of work: a patient question, its clinician rewrite, and the
/// ordered note sentences. Sentence ids are unique and contiguous from 1.
struct CaseStudy {
    std::string case_id;
    std::string patient_question;
    std::string clinician_question;
    std::vector<NoteSentence> sentences;

    /// nullptr when the id is out of range.
    const NoteSentence* find_sentence(int sentence_id) const;

    bool operator==(const CaseStudy&) const = default;
};

enum class Split { Dev, Test };

struct Dataset {
    Split split = Split::Dev;
    std::vector<CaseStudy> cases;

    const CaseStudy* find_case(std::string_view case_id) const;

    bool operator==(const Dataset&) const = default;
};

/// Loads and validates a dataset file (see README for the JSON schema).
/// Throws CorpusError with the case id and position of the first problem:
/// malformed file, duplicate case_id, non-contiguous sentence ids, unknown
/// label string, or unlabeled sentences outside the test split.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::string_view json_text);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& dataset);

/// Query formulation for retrieval. Both (patient question, one newline,
/// clinician question) is the default everywhere.
enum class QueryMode { PatientOnly, ClinicianOnly, Both };

std::string_view to_string(QueryMode mode);
std::optional<QueryMode> query_mode_from_string(std::string_view name);

std::string build_query(const CaseStudy& cs, QueryMode mode);

struct DistributionSummary {
    double min = 0, max = 0, mean = 0, median = 0, q1 = 0, q3 = 0;
};

struct StatsReport {
    std::vector<std::pair<std::string, std::size_t>> per_case_counts;
    DistributionSummary sentence_counts;     // sentences per case
    DistributionSummary sentence_lengths;    // whitespace tokens per sentence
};

/// Sentence-count and sentence-length statistics. Throws CorpusError on an
/// empty case list.
StatsReport corpus_stats(const std::vector<CaseStudy>& cases);

std::string stats_to_csv(const StatsReport& report);

} // namespace cliniqa
