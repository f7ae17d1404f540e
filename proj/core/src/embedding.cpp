#include "cliniqa/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "http_url.hpp"

namespace cliniqa {

using json = nlohmann::json;

namespace {

void check_vector(const Embedding& v, const std::string& what) {
    if (v.empty()) throw EmbeddingError(what + ": empty vector");
    for (double x : v)
        if (!std::isfinite(x)) throw EmbeddingError(what + ": non-finite component");
}

} // namespace

std::string sentence_key(const std::string& case_id, int sentence_id) {
    return case_id + "#" + std::to_string(sentence_id);
}

Embedding EmbeddingProvider::embed_sentence(const std::string&, int, const std::string& text) {
    return embed(text);
}

FileBackedProvider FileBackedProvider::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw EmbeddingError("cannot open embedding store: " + path.string());
    FileBackedProvider p;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw EmbeddingError("embedding store line " + std::to_string(lineno) + ": invalid JSON");
        std::string key;
        Embedding vec;
        try {
            key = rec.at("key").get<std::string>();
            vec = rec.at("vector").get<Embedding>();
        } catch (const json::exception& e) {
            throw EmbeddingError("embedding store line " + std::to_string(lineno) + ": " + e.what());
        }
        check_vector(vec, "embedding store key \"" + key + "\"");
        if (p.dim_ == 0) {
            p.dim_ = vec.size();
        } else if (vec.size() != p.dim_) {
            throw EmbeddingError("embedding store key \"" + key + "\": dimension mismatch (" +
                                 std::to_string(vec.size()) + " vs " + std::to_string(p.dim_) + ")");
        }
        p.store_[std::move(key)] = std::move(vec);
    }
    return p;
}

Embedding FileBackedProvider::embed(const std::string& text) {
    const auto it = store_.find(text);
    if (it == store_.end()) throw EmbeddingError("missing embedding: \"" + text + "\"");
    return it->second;
}

Embedding FileBackedProvider::embed_sentence(const std::string& case_id, int sentence_id,
                                             const std::string& text) {
    const auto it = store_.find(sentence_key(case_id, sentence_id));
    if (it != store_.end()) return it->second;
    return embed(text);
}

struct HttpProvider::Impl {
    httplib::Client client;
    std::string path;
    std::mutex mu;

    Impl(const std::string& base, std::string p) : client(base), path(std::move(p)) {
        client.set_read_timeout(60, 0);
        client.set_connection_timeout(10, 0);
    }
};

HttpProvider::HttpProvider(std::string url, std::string bearer_token, std::size_t expected_dim)
    : url_(std::move(url)), token_(std::move(bearer_token)), expected_dim_(expected_dim) {
    auto [base, path] = detail::split_http_url<EmbeddingError>(url_);
    impl_ = std::make_unique<Impl>(base, path);
    if (!token_.empty())
        impl_->client.set_default_headers({{"Authorization", "Bearer " + token_}});
}

HttpProvider::~HttpProvider() = default;

std::vector<Embedding> HttpProvider::embed_batch(const std::vector<std::string>& texts) {
    json body;
    body["inputs"] = texts;
    httplib::Result res;
    {
        // httplib clients are not safe for concurrent requests on one connection
        std::lock_guard lock(impl_->mu);
        res = impl_->client.Post(impl_->path, body.dump(), "application/json");
    }
    if (!res) throw EmbeddingError("embedding endpoint unreachable: " + url_);
    if (res->status != 200)
        throw EmbeddingError("embedding endpoint returned status " + std::to_string(res->status));
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("vectors") || !reply["vectors"].is_array())
        throw EmbeddingError("embedding endpoint returned malformed body");
    std::vector<Embedding> out;
    try {
        out = reply["vectors"].get<std::vector<Embedding>>();
    } catch (const json::exception& e) {
        throw EmbeddingError(std::string("embedding endpoint returned malformed vectors: ") + e.what());
    }
    if (out.size() != texts.size())
        throw EmbeddingError("embedding endpoint returned " + std::to_string(out.size()) +
                             " vectors for " + std::to_string(texts.size()) + " inputs");
    for (const auto& v : out) {
        check_vector(v, "embedding endpoint vector");
        if (expected_dim_ != 0 && v.size() != expected_dim_)
            throw EmbeddingError("dimension mismatch: endpoint returned " +
                                 std::to_string(v.size()) + "-dim vector, expected " +
                                 std::to_string(expected_dim_));
    }
    return out;
}

Embedding HttpProvider::embed(const std::string& text) {
    return embed_batch({text}).front();
}

Embedding CachingProvider::embed(const std::string& text) {
    {
        std::lock_guard lock(mu_);
        const auto it = cache_.find(text);
        if (it != cache_.end()) return it->second;
    }
    Embedding v = inner_.embed(text);
    std::lock_guard lock(mu_);
    return cache_.emplace(text, std::move(v)).first->second;
}

Embedding CachingProvider::embed_sentence(const std::string& case_id, int sentence_id,
                                          const std::string& text) {
    const std::string key = sentence_key(case_id, sentence_id);
    {
        std::lock_guard lock(mu_);
        const auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    Embedding v = inner_.embed_sentence(case_id, sentence_id, text);
    std::lock_guard lock(mu_);
    return cache_.emplace(key, std::move(v)).first->second;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw EmbeddingError("cosine: dimension mismatch (" + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()) + ")");
    if (a.empty()) throw EmbeddingError("cosine: empty vectors");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw EmbeddingError("cosine: zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

bool RankedList::is_sorted() const {
    for (std::size_t i = 1; i < entries.size(); ++i) {
        const auto& prev = entries[i - 1];
        const auto& cur = entries[i];
        if (cur.score > prev.score) return false;
        if (cur.score == prev.score && cur.sentence_id < prev.sentence_id) return false;
    }
    return true;
}

VectorIndex VectorIndex::build(const std::vector<CaseStudy>& cases, EmbeddingProvider& provider) {
    VectorIndex index;
    for (const auto& cs : cases) {
        for (const auto& s : cs.sentences) {
            Embedding v = provider.embed_sentence(cs.case_id, s.id, s.text);
            check_vector(v, "sentence " + sentence_key(cs.case_id, s.id));
            if (index.dim_ == 0) {
                index.dim_ = v.size();
            } else if (v.size() != index.dim_) {
                throw EmbeddingError("dimension mismatch: sentence " +
                                     sentence_key(cs.case_id, s.id) + " has dim " +
                                     std::to_string(v.size()) + ", index has dim " +
                                     std::to_string(index.dim_));
            }
            index.entries_[{cs.case_id, s.id}] = std::move(v);
        }
    }
    return index;
}

const Embedding& VectorIndex::vector_for(const std::string& case_id, int sentence_id) const {
    const auto it = entries_.find({case_id, sentence_id});
    if (it == entries_.end())
        throw EmbeddingError("missing sentence vector: " + sentence_key(case_id, sentence_id));
    return it->second;
}

RankedList rank_sentences(const CaseStudy& cs, const Embedding& query_vec,
                          const VectorIndex& index) {
    RankedList list;
    list.case_id = cs.case_id;
    list.entries.reserve(cs.sentences.size());
    for (const auto& s : cs.sentences)
        list.entries.push_back({s.id, cosine(query_vec, index.vector_for(cs.case_id, s.id))});
    std::sort(list.entries.begin(), list.entries.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.sentence_id < b.sentence_id;
    });
    return list;
}

} // namespace cliniqa
