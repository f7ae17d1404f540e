#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cliniqa/attribution.hpp"
#include "cliniqa/corpus.hpp"
#include "cliniqa/embedding.hpp"
#include "cliniqa/evaluation.hpp"
#include "cliniqa/generation.hpp"
#include "cliniqa/parallel.hpp"
#include "cliniqa/text.hpp"
#include "cliniqa/truncation.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cliniqa;

namespace {

constexpr int kExitError = 1;
constexpr int kExitInvalidData = 2;

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? value : "";
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

json read_json_file(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw Error(std::string("missing upstream artifact: ") + what + " (" +
                         path.string() + ")");
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(path.string() + " is not valid JSON");
    return j;
}

// ---------------------------------------------------------------------------
// provider / client wiring

struct ProviderHandle {
    std::unique_ptr<EmbeddingProvider> inner;
    std::unique_ptr<CachingProvider> cache;

    EmbeddingProvider& get() { return cache ? static_cast<EmbeddingProvider&>(*cache) : *inner; }
};

ProviderHandle make_provider(const std::string& spec, std::size_t http_dim) {
    ProviderHandle handle;
    if (spec.rfind("file:", 0) == 0) {
        handle.inner = std::make_unique<FileBackedProvider>(
            FileBackedProvider::load(spec.substr(5)));
        return handle;
    }
    if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
        handle.inner = std::make_unique<HttpProvider>(spec, env_or_empty("EMBED_API_TOKEN"),
                                                      http_dim);
        handle.cache = std::make_unique<CachingProvider>(*handle.inner);
        return handle;
    }
    throw Error("embedding provider must be file:PATH or an http(s) URL, got \"" + spec + "\"");
}

std::unique_ptr<LlmClient> make_llm_client(const std::string& spec, const std::string& model) {
    if (spec == "mock:echo") return std::make_unique<EchoClient>();
    if (spec.rfind("mock:scripted:", 0) == 0) {
        const json script = read_json_file(spec.substr(14), "scripted responses");
        if (!script.is_array()) throw Error("scripted response file must be a JSON array");
        return std::make_unique<ScriptedClient>(script.get<std::vector<std::string>>());
    }
    if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0)
        return std::make_unique<HttpLlmClient>(spec, env_or_empty("LLM_API_TOKEN"), model);
    throw Error("llm endpoint must be an http(s) URL, mock:echo, or mock:scripted:FILE");
}

// ---------------------------------------------------------------------------
// json shapes

json diagnostics_to_json(const Diagnostics& diag) {
    json out = json::object();
    for (const auto& [key, value] : diag) {
        if (std::holds_alternative<double>(value)) {
            out[key] = std::get<double>(value);
        } else {
            out[key] = std::get<std::string>(value);
        }
    }
    return out;
}

json prf_to_json(const Prf& p) {
    return json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

json factuality_to_json(const FactualityReport& report) {
    json per_case = json::array();
    for (const auto& c : report.per_case) {
        json entry{{"case_id", c.case_id}};
        if (c.strict_scored) entry["strict"] = prf_to_json(c.strict);
        if (c.lenient_scored) entry["lenient"] = prf_to_json(c.lenient);
        per_case.push_back(std::move(entry));
    }
    return json{{"strict", prf_to_json(report.strict)},
                {"lenient", prf_to_json(report.lenient)},
                {"strict_skipped", report.strict_skipped},
                {"lenient_skipped", report.lenient_skipped},
                {"per_case", std::move(per_case)}};
}

json relevance_to_json(const RelevanceReport& r) {
    json out{{"bleu", r.bleu},         {"rouge", r.rouge}, {"sari", r.sari},
             {"semantic", r.semantic}, {"mean", r.mean}};
    if (!r.external.empty()) out["external"] = r.external;
    return out;
}

json citations_to_json(const std::vector<Citation>& citations) {
    json out = json::array();
    for (const auto& c : citations) {
        json ids = json::array();
        for (int id : c.cited_ids) ids.push_back(id);
        out.push_back(json{{"sentence", c.answer_sentence_index}, {"ids", std::move(ids)}});
    }
    return out;
}

std::vector<Citation> citations_from_json(const json& arr) {
    std::vector<Citation> out;
    for (const auto& jc : arr) {
        Citation c;
        c.answer_sentence_index = jc.at("sentence").get<std::size_t>();
        for (const auto& id : jc.at("ids")) c.cited_ids.insert(id.get<int>());
        out.push_back(std::move(c));
    }
    return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// commands

struct RetrieveOpts {
    std::string dataset, embedding, out = "runs";
    std::string strategy = "surprise";
    std::string query_mode = "both";
    std::size_t embedding_dim = 1024;
    std::size_t jobs = 1;
    unsigned seed = 0;
};

int cmd_validate(const std::string& dataset_path) {
    const Dataset ds = load_dataset(dataset_path);
    std::size_t sentences = 0;
    std::map<std::string, std::size_t> labels;
    for (const auto& cs : ds.cases) {
        sentences += cs.sentences.size();
        for (const auto& s : cs.sentences) ++labels[std::string(to_string(s.label))];
    }
    std::printf("dataset OK: %zu cases, %zu sentences, split=%s\n", ds.cases.size(), sentences,
                ds.split == Split::Dev ? "dev" : "test");
    for (const auto& [label, count] : labels) std::printf("  %-14s %zu\n", label.c_str(), count);
    return 0;
}

int cmd_stats(const std::string& dataset_path, const std::string& out) {
    const Dataset ds = load_dataset(dataset_path);
    const StatsReport report = corpus_stats(ds.cases);
    std::printf("%-12s %s\n", "case_id", "sentences");
    for (const auto& [id, n] : report.per_case_counts) std::printf("%-12s %zu\n", id.c_str(), n);
    const auto print_summary = [](const char* name, const DistributionSummary& d) {
        std::printf("%s: min=%g q1=%g median=%g mean=%g q3=%g max=%g\n", name, d.min, d.q1,
                    d.median, d.mean, d.q3, d.max);
    };
    print_summary("sentences per case", report.sentence_counts);
    print_summary("tokens per sentence", report.sentence_lengths);
    if (!out.empty()) {
        write_file(fs::path(out) / "stats.csv", stats_to_csv(report));
        std::printf("wrote %s\n", (fs::path(out) / "stats.csv").string().c_str());
    }
    return 0;
}

int cmd_retrieve(const RetrieveOpts& opts) {
    const Dataset ds = load_dataset(opts.dataset);
    const auto mode = query_mode_from_string(opts.query_mode);
    if (!mode) throw Error("unknown query mode \"" + opts.query_mode + "\"");
    const TruncationStrategy strategy = TruncationStrategy::parse(opts.strategy);
    ProviderHandle provider = make_provider(opts.embedding, opts.embedding_dim);
    const VectorIndex index = VectorIndex::build(ds.cases, provider.get());

    struct CaseOutput {
        RankedList ranked;
        TruncationResult truncation;
    };
    std::vector<CaseOutput> outputs(ds.cases.size());
    parallel_for(ds.cases.size(), opts.jobs, [&](std::size_t i) {
        const CaseStudy& cs = ds.cases[i];
        const std::string query = build_query(cs, *mode);
        const Embedding query_vec = provider.get().embed(query);
        outputs[i].ranked = rank_sentences(cs, query_vec, index);
        outputs[i].truncation = strategy.apply(outputs[i].ranked, cs, query);
    });

    json cases = json::array();
    std::vector<TruncationResult> truncations;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        json ranked = json::array();
        for (const auto& e : outputs[i].ranked.entries)
            ranked.push_back(json{{"id", e.sentence_id}, {"score", e.score}});
        cases.push_back(json{{"case_id", ds.cases[i].case_id},
                             {"ranked", std::move(ranked)},
                             {"kept_ids", outputs[i].truncation.kept_ids},
                             {"cut_index", outputs[i].truncation.cut_index},
                             {"diagnostics", diagnostics_to_json(outputs[i].truncation.diagnostics)}});
        truncations.push_back(std::move(outputs[i].truncation));
    }
    const json run{{"strategy", opts.strategy},
                   {"query_mode", opts.query_mode},
                   {"seed", opts.seed},
                   {"cases", std::move(cases)}};
    write_file(fs::path(opts.out) / "retrieval.json", dump(run));
    std::printf("wrote %s\n", (fs::path(opts.out) / "retrieval.json").string().c_str());

    if (ds.split == Split::Dev) {
        const FactualityReport report = retrieval_eval(ds.cases, truncations);
        write_file(fs::path(opts.out) / "retrieval_report.json", dump(factuality_to_json(report)));
        if (report.strict_skipped > 0)
            std::fprintf(stderr, "warning: %zu case(s) without essential labels skipped\n",
                         report.strict_skipped);
        std::printf("strict  P=%.2f R=%.2f F1=%.2f\n", report.strict.precision,
                    report.strict.recall, report.strict.f1);
        std::printf("lenient P=%.2f R=%.2f F1=%.2f\n", report.lenient.precision,
                    report.lenient.recall, report.lenient.f1);
    }
    return 0;
}

struct GenerateOpts {
    std::string dataset, retrieval, out = "runs";
    std::string llm_endpoint = "mock:echo";
    std::string model = "llama-3.3-70b";
    std::string attribution_mode = "post-retrieval";
    std::string shots = "one";
    int max_tokens = 200;
    double temperature = 0.001;
    std::size_t word_limit = 75;
    std::size_t jobs = 1;
};

int cmd_generate(const GenerateOpts& opts) {
    const Dataset ds = load_dataset(opts.dataset);
    const fs::path retrieval_path =
        opts.retrieval.empty() ? fs::path(opts.out) / "retrieval.json" : fs::path(opts.retrieval);
    const json retrieval = read_json_file(retrieval_path, "retrieval output");

    std::map<std::string, std::vector<int>> kept_by_case;
    for (const auto& jc : retrieval.at("cases"))
        kept_by_case[jc.at("case_id").get<std::string>()] =
            jc.at("kept_ids").get<std::vector<int>>();

    PromptSpec spec;
    if (opts.attribution_mode == "post-retrieval") {
        spec.approach = AttributionApproach::PostRetrieval;
    } else if (opts.attribution_mode == "post-generation") {
        spec.approach = AttributionApproach::PostGeneration;
    } else {
        throw Error("unknown attribution mode \"" + opts.attribution_mode + "\"");
    }
    if (opts.shots == "zero") {
        spec.shots = Shots::Zero;
    } else if (opts.shots == "one") {
        spec.shots = Shots::One;
    } else {
        throw Error("unknown shots value \"" + opts.shots + "\" (use zero or one)");
    }
    spec.max_tokens = opts.max_tokens;
    spec.temperature = opts.temperature;
    spec.validate();

    auto client = make_llm_client(opts.llm_endpoint, opts.model);
    const bool is_mock = opts.llm_endpoint.rfind("mock:", 0) == 0;
    const std::string recorded_model = is_mock ? opts.llm_endpoint : opts.model;
    // a scripted mock replays responses in order, so it cannot run in parallel
    const std::size_t jobs = opts.llm_endpoint.rfind("mock:scripted:", 0) == 0 ? 1 : opts.jobs;

    struct CaseOutcome {
        std::optional<GenerationResult> result;
        std::vector<GenerationAttempt> failed_attempts;
    };
    std::vector<CaseOutcome> outcomes(ds.cases.size());
    parallel_for(ds.cases.size(), jobs, [&](std::size_t i) {
        const CaseStudy& cs = ds.cases[i];
        const auto kept = kept_by_case.find(cs.case_id);
        if (kept == kept_by_case.end())
            throw Error("missing upstream artifact: no retrieval record for case \"" +
                        cs.case_id + "\"");
        Evidence evidence;
        for (int id : kept->second) {
            const NoteSentence* s = cs.find_sentence(id);
            if (!s) throw Error("retrieval record cites unknown sentence " + std::to_string(id) +
                                " in case \"" + cs.case_id + "\"");
            evidence.emplace_back(id, s->text);
        }
        try {
            outcomes[i].result = generate_valid(*client, spec, cs, evidence, opts.word_limit);
        } catch (const GenerationFailure& failure) {
            outcomes[i].failed_attempts = failure.attempts;
        }
    });

    json cases = json::array();
    std::size_t failures = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto attempts_to_json = [](const std::vector<GenerationAttempt>& attempts) {
            json out = json::array();
            for (const auto& a : attempts)
                out.push_back(json{{"attempt", a.attempt_number},
                                   {"validity", std::string(to_string(a.validity))},
                                   {"raw_output", a.raw_output}});
            return out;
        };
        json entry{{"case_id", ds.cases[i].case_id}};
        if (outcomes[i].result) {
            const GenerationResult& r = *outcomes[i].result;
            entry["failed"] = false;
            entry["sentences"] = r.sentences;
            entry["raw_output"] = r.raw_output;
            entry["attempts"] = attempts_to_json(r.attempts);
            if (r.answer) entry["citations"] = citations_to_json(r.answer->citations);
        } else {
            ++failures;
            entry["failed"] = true;
            entry["sentences"] = json::array();
            entry["attempts"] = attempts_to_json(outcomes[i].failed_attempts);
        }
        cases.push_back(std::move(entry));
    }

    const json run{{"model", recorded_model},
                   {"attribution_mode", opts.attribution_mode},
                   {"shots", opts.shots},
                   {"max_tokens", opts.max_tokens},
                   {"word_limit", opts.word_limit},
                   {"strategy", retrieval.value("strategy", "")},
                   {"cases", std::move(cases)}};
    write_file(fs::path(opts.out) / "answers.json", dump(run));
    std::printf("wrote %s (%zu cases, %zu failed)\n",
                (fs::path(opts.out) / "answers.json").string().c_str(), ds.cases.size(), failures);
    return failures == ds.cases.size() && !ds.cases.empty() ? kExitError : 0;
}

struct AttributeOpts {
    std::string dataset, answers, retrieval, embedding, out = "runs";
    double w_lexical = 0.0, w_fuzzy = 0.5, w_semantic = 0.5;
    double threshold = 0.5;
    std::size_t embedding_dim = 1024;
    std::size_t jobs = 1;
};

int cmd_attribute(const AttributeOpts& opts) {
    const Dataset ds = load_dataset(opts.dataset);
    const fs::path answers_path =
        opts.answers.empty() ? fs::path(opts.out) / "answers.json" : fs::path(opts.answers);
    const json answers = read_json_file(answers_path, "generation output");

    std::map<std::string, std::vector<std::string>> sentences_by_case;
    for (const auto& jc : answers.at("cases"))
        sentences_by_case[jc.at("case_id").get<std::string>()] =
            jc.at("sentences").get<std::vector<std::string>>();

    std::map<std::string, std::vector<int>> kept_by_case;
    if (!opts.retrieval.empty()) {
        const json retrieval = read_json_file(opts.retrieval, "retrieval output");
        for (const auto& jc : retrieval.at("cases"))
            kept_by_case[jc.at("case_id").get<std::string>()] =
                jc.at("kept_ids").get<std::vector<int>>();
    }

    const AttributionConfig config{{opts.w_lexical, opts.w_fuzzy, opts.w_semantic},
                                   opts.threshold};
    if (!config.weights.valid()) throw Error("similarity weights must be in [0,1] and sum to 1");
    if (!(config.threshold > 0.0) || !(config.threshold < 1.0))
        throw Error("threshold must be in (0,1)");
    ProviderHandle provider = make_provider(opts.embedding, opts.embedding_dim);

    const json config_json{{"w1", opts.w_lexical},
                           {"w2", opts.w_fuzzy},
                           {"w3", opts.w_semantic},
                           {"threshold", opts.threshold}};

    std::vector<json> entries(ds.cases.size());
    parallel_for(ds.cases.size(), opts.jobs, [&](std::size_t i) {
        const CaseStudy& cs = ds.cases[i];
        const auto found = sentences_by_case.find(cs.case_id);
        if (found == sentences_by_case.end())
            throw Error("missing upstream artifact: no answer for case \"" + cs.case_id + "\"");

        std::vector<std::pair<int, std::string>> retrieved;
        const auto kept = kept_by_case.find(cs.case_id);
        if (kept != kept_by_case.end()) {
            for (int id : kept->second) retrieved.emplace_back(id, cs.find_sentence(id)->text);
        } else {
            for (const auto& s : cs.sentences) retrieved.emplace_back(s.id, s.text);
        }
        const auto citations =
            attribute_post_generation(found->second, retrieved, config, provider.get());
        entries[i] = json{{"case_id", cs.case_id},
                          {"answer", found->second},
                          {"citations", citations_to_json(citations)},
                          {"config", config_json}};
    });

    json cases = json::array();
    for (auto& e : entries) cases.push_back(std::move(e));
    write_file(fs::path(opts.out) / "attribution.json", dump(json{{"cases", std::move(cases)}}));
    std::printf("wrote %s\n", (fs::path(opts.out) / "attribution.json").string().c_str());
    return 0;
}

struct EvaluateOpts {
    std::string dataset, answers, attribution, embedding, out = "runs";
    std::string external_scorer; // optional URL
    std::size_t embedding_dim = 1024;
    std::size_t jobs = 1;
};

int cmd_evaluate(const EvaluateOpts& opts) {
    const Dataset ds = load_dataset(opts.dataset);
    if (!opts.answers.empty() && !opts.attribution.empty())
        throw Error("pass either --answers or --attribution, not both");

    fs::path source_path;
    bool from_attribution = false;
    if (!opts.attribution.empty()) {
        source_path = opts.attribution;
        from_attribution = true;
    } else if (!opts.answers.empty()) {
        source_path = opts.answers;
    } else {
        source_path = fs::path(opts.out) / "answers.json";
    }
    const json source = read_json_file(source_path, "answers");

    struct CaseAnswer {
        std::vector<std::string> sentences;
        std::vector<Citation> citations;
    };
    std::map<std::string, CaseAnswer> by_case;
    for (const auto& jc : source.at("cases")) {
        CaseAnswer a;
        a.sentences = jc.at(from_attribution ? "answer" : "sentences")
                          .get<std::vector<std::string>>();
        if (jc.contains("citations")) a.citations = citations_from_json(jc.at("citations"));
        by_case[jc.at("case_id").get<std::string>()] = std::move(a);
    }

    ProviderHandle provider = make_provider(opts.embedding, opts.embedding_dim);
    std::optional<ExternalScorer> scorer;
    if (!opts.external_scorer.empty()) scorer.emplace(opts.external_scorer);

    std::vector<std::set<int>> cited(ds.cases.size());
    std::vector<std::optional<RelevanceReport>> rel(ds.cases.size());
    parallel_for(ds.cases.size(), opts.jobs, [&](std::size_t i) {
        const CaseStudy& cs = ds.cases[i];
        const auto found = by_case.find(cs.case_id);
        if (found == by_case.end())
            throw Error("missing upstream artifact: no answer for case \"" + cs.case_id + "\"");
        for (const auto& c : found->second.citations)
            cited[i].insert(c.cited_ids.begin(), c.cited_ids.end());
        if (!gold_ids(cs, Variant::Strict).empty()) {
            const std::string answer_text = text::join(found->second.sentences, " ");
            RelevanceReport r = relevance(answer_text, cs, provider.get());
            if (scorer) {
                std::vector<std::string> essentials;
                for (const auto& s : cs.sentences)
                    if (s.label == RelevanceLabel::Essential) essentials.push_back(s.text);
                r.external["external"] = scorer->score(answer_text, text::join(essentials, " "));
            }
            rel[i] = std::move(r);
        }
    });

    const FactualityReport fact = factuality_from_ids(ds.cases, cited);
    std::vector<RelevanceReport> scored;
    for (const auto& r : rel)
        if (r) scored.push_back(*r);
    if (scored.size() < ds.cases.size())
        std::fprintf(stderr, "warning: %zu case(s) without essential labels skipped\n",
                     ds.cases.size() - scored.size());
    const RelevanceReport rel_avg = average_relevance(scored);
    const PipelineScore score = overall_score(fact, rel_avg);

    const std::string strategy = source.value("strategy", "");
    const std::string model = source.value("model", "");
    json out{{"strategy", strategy},
             {"model", model},
             {"factuality", factuality_to_json(score.factuality)},
             {"relevance", relevance_to_json(score.relevance)},
             {"overall", score.overall}};
    write_file(fs::path(opts.out) / "evaluation.json", dump(out));

    std::string csv =
        "strategy,model,variant,precision,recall,f1,bleu,rouge,sari,semantic,relevance,overall\n";
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s,%s,strict,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n",
                  strategy.c_str(), model.c_str(), score.factuality.strict.precision,
                  score.factuality.strict.recall, score.factuality.strict.f1, rel_avg.bleu,
                  rel_avg.rouge, rel_avg.sari, rel_avg.semantic, rel_avg.mean, score.overall);
    csv += buf;
    std::snprintf(buf, sizeof(buf), "%s,%s,lenient,%.4f,%.4f,%.4f,,,,,,\n", strategy.c_str(),
                  model.c_str(), score.factuality.lenient.precision,
                  score.factuality.lenient.recall, score.factuality.lenient.f1);
    csv += buf;
    write_file(fs::path(opts.out) / "evaluation.csv", csv);

    std::printf("strict  P=%.2f R=%.2f F1=%.2f\n", score.factuality.strict.precision,
                score.factuality.strict.recall, score.factuality.strict.f1);
    std::printf("relevance=%.2f overall=%.2f\n", score.relevance.mean, score.overall);
    std::printf("wrote %s\n", (fs::path(opts.out) / "evaluation.json").string().c_str());
    return 0;
}

struct GridOpts {
    std::string dataset, answers, embedding, out = "runs";
    double weight_step = 0.1;
    std::string thresholds; // comma-separated, default 0.1..0.9
    bool no_zero_weights = false;
    std::size_t embedding_dim = 1024;
    std::size_t jobs = 1;
};

int cmd_grid_search(const GridOpts& opts) {
    const Dataset ds = load_dataset(opts.dataset);
    const fs::path answers_path =
        opts.answers.empty() ? fs::path(opts.out) / "answers.json" : fs::path(opts.answers);
    const json answers = read_json_file(answers_path, "generation output");

    std::map<std::string, std::vector<std::string>> by_case;
    for (const auto& jc : answers.at("cases"))
        by_case[jc.at("case_id").get<std::string>()] =
            jc.at("sentences").get<std::vector<std::string>>();

    std::vector<std::vector<std::string>> sentences;
    for (const auto& cs : ds.cases) {
        const auto found = by_case.find(cs.case_id);
        if (found == by_case.end())
            throw Error("missing upstream artifact: no answer for case \"" + cs.case_id + "\"");
        sentences.push_back(found->second);
    }

    std::vector<double> thresholds;
    if (!opts.thresholds.empty()) {
        std::stringstream ss(opts.thresholds);
        std::string token;
        while (std::getline(ss, token, ',')) thresholds.push_back(std::stod(token));
    }

    ProviderHandle provider = make_provider(opts.embedding, opts.embedding_dim);
    const auto rows = grid_search(ds.cases, sentences, provider.get(), opts.weight_step,
                                  thresholds, opts.jobs, !opts.no_zero_weights);
    write_file(fs::path(opts.out) / "grid.csv", grid_to_csv(rows));

    std::printf("%zu configurations; best: w=(%.1f, %.1f, %.1f) T=%.1f overall=%.4f\n",
                rows.size(), rows.front().weights.lexical, rows.front().weights.fuzzy,
                rows.front().weights.semantic, rows.front().threshold, rows.front().overall);
    std::printf("wrote %s\n", (fs::path(opts.out) / "grid.csv").string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grounded clinical question answering pipeline"};
    app.require_subcommand(1);

    std::string validate_dataset;
    auto* validate = app.add_subcommand("validate", "Check a dataset file");
    validate->add_option("--dataset", validate_dataset, "Dataset JSON file")->required();

    std::string stats_dataset, stats_out;
    auto* stats = app.add_subcommand("stats", "Sentence count and length statistics");
    stats->add_option("--dataset", stats_dataset, "Dataset JSON file")->required();
    stats->add_option("--out", stats_out, "Directory for stats.csv");

    RetrieveOpts r;
    auto* retrieve = app.add_subcommand("retrieve", "Rank and truncate sentences per case");
    retrieve->add_option("--dataset", r.dataset)->required();
    retrieve->add_option("--embedding", r.embedding, "file:PATH or http(s) URL")->required();
    retrieve->add_option("--embedding-dim", r.embedding_dim, "Expected dim for http providers");
    retrieve->add_option("--strategy", r.strategy,
                         "fixed:<k> | rerank:<k>:<n> | autocut | autocut-star | elbow | "
                         "surprise[:alpha]");
    retrieve->add_option("--query-mode", r.query_mode, "patient | clinician | both");
    retrieve->add_option("--out", r.out);
    retrieve->add_option("--jobs", r.jobs);
    retrieve->add_option("--seed", r.seed);

    GenerateOpts g;
    auto* generate = app.add_subcommand("generate", "Generate answers over retrieved evidence");
    generate->add_option("--dataset", g.dataset)->required();
    generate->add_option("--retrieval", g.retrieval, "Defaults to <out>/retrieval.json");
    generate->add_option("--llm-endpoint", g.llm_endpoint,
                         "http(s) URL, mock:echo, or mock:scripted:FILE");
    generate->add_option("--model", g.model);
    generate->add_option("--attribution-mode", g.attribution_mode,
                         "post-retrieval | post-generation");
    generate->add_option("--shots", g.shots, "zero | one");
    generate->add_option("--max-tokens", g.max_tokens);
    generate->add_option("--temperature", g.temperature);
    generate->add_option("--word-limit", g.word_limit);
    generate->add_option("--out", g.out);
    generate->add_option("--jobs", g.jobs);

    AttributeOpts a;
    auto* attribute = app.add_subcommand("attribute", "Post-generation attribution");
    attribute->add_option("--dataset", a.dataset)->required();
    attribute->add_option("--answers", a.answers, "Defaults to <out>/answers.json");
    attribute->add_option("--retrieval", a.retrieval,
                          "Restrict candidates to retrieved ids (default: all sentences)");
    attribute->add_option("--embedding", a.embedding)->required();
    attribute->add_option("--embedding-dim", a.embedding_dim);
    attribute->add_option("--w-lexical", a.w_lexical);
    attribute->add_option("--w-fuzzy", a.w_fuzzy);
    attribute->add_option("--w-semantic", a.w_semantic);
    attribute->add_option("--threshold", a.threshold);
    attribute->add_option("--out", a.out);
    attribute->add_option("--jobs", a.jobs);

    EvaluateOpts e;
    auto* evaluate = app.add_subcommand("evaluate", "Factuality, relevance and overall score");
    evaluate->add_option("--dataset", e.dataset)->required();
    evaluate->add_option("--answers", e.answers, "Answers from generate");
    evaluate->add_option("--attribution", e.attribution, "Attribution output to score instead");
    evaluate->add_option("--embedding", e.embedding)->required();
    evaluate->add_option("--embedding-dim", e.embedding_dim);
    evaluate->add_option("--external-scorer", e.external_scorer,
                         "Optional external relevance scorer URL");
    evaluate->add_option("--out", e.out);
    evaluate->add_option("--jobs", e.jobs);

    GridOpts gs;
    auto* grid = app.add_subcommand("grid-search", "Weight/threshold sweep for attribution");
    grid->add_option("--dataset", gs.dataset)->required();
    grid->add_option("--answers", gs.answers, "Defaults to <out>/answers.json");
    grid->add_option("--embedding", gs.embedding)->required();
    grid->add_option("--embedding-dim", gs.embedding_dim);
    grid->add_option("--weight-step", gs.weight_step);
    grid->add_option("--thresholds", gs.thresholds, "Comma-separated, default 0.1..0.9");
    grid->add_flag("--no-zero-weights", gs.no_zero_weights,
                   "Exclude triples with a zero component");
    grid->add_option("--out", gs.out);
    grid->add_option("--jobs", gs.jobs);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) return cmd_validate(validate_dataset);
        if (*stats) return cmd_stats(stats_dataset, stats_out);
        if (*retrieve) return cmd_retrieve(r);
        if (*generate) return cmd_generate(g);
        if (*attribute) return cmd_attribute(a);
        if (*evaluate) return cmd_evaluate(e);
        if (*grid) return cmd_grid_search(gs);
    } catch (const CorpusError& err) {
        std::cerr << "dataset error: " << err.what() << "\n";
        return kExitInvalidData;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitError;
    }
    return 0;
}
