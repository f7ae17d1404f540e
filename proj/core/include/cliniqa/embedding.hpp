#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cliniqa/corpus.hpp"
#include "cliniqa/error.hpp"
#include "cliniqa/ranked_list.hpp"

namespace cliniqa {

class EmbeddingError : public Error {
public:
    using Error::Error;
};

using Embedding = std::vector<double>;

/// Lookup key for a note sentence in a file-backed store: "case_id#sentence_id".
std::string sentence_key(const std::string& case_id, int sentence_id);

/// Text-to-vector contract. Implementations must be safe for concurrent use.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual Embedding embed(const std::string& text) = 0;

    /// Declared dimension; 0 when only known after the first call.
    virtual std::size_t dim() const = 0;

    /// Vector for a note sentence. Defaults to embedding the raw text;
    /// file-backed stores prefer the "case_id#sentence_id" key.
    virtual Embedding embed_sentence(const std::string& case_id, int sentence_id,
                                     const std::string& text);
};

/// JSON-lines store, one record per line: {"key": str, "vector": [float, ...]}.
/// Keys are raw text (query embeddings) or "case_id#sentence_id".
class FileBackedProvider final : public EmbeddingProvider {
public:
    static FileBackedProvider load(const std::filesystem::path& path);

    Embedding embed(const std::string& text) override;
    std::size_t dim() const override { return dim_; }
    Embedding embed_sentence(const std::string& case_id, int sentence_id,
                             const std::string& text) override;

    bool contains(const std::string& key) const { return store_.count(key) > 0; }
    std::size_t size() const { return store_.size(); }

private:
    std::unordered_map<std::string, Embedding> store_;
    std::size_t dim_ = 0;
};

/// HTTP provider: POST {"inputs": [str]} -> {"vectors": [[float, ...]]}.
/// A bearer token (EMBED_API_TOKEN) is attached when non-empty. A non-zero
/// expected_dim makes mismatching responses an error.
class HttpProvider final : public EmbeddingProvider {
public:
    HttpProvider(std::string url, std::string bearer_token, std::size_t expected_dim = 1024);
    ~HttpProvider() override;

    Embedding embed(const std::string& text) override;
    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts);
    std::size_t dim() const override { return expected_dim_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string url_;
    std::string token_;
    std::size_t expected_dim_;
};

/// Thread-safe memo layer so repeated texts hit the backend once.
class CachingProvider final : public EmbeddingProvider {
public:
    explicit CachingProvider(EmbeddingProvider& inner) : inner_(inner) {}

    Embedding embed(const std::string& text) override;
    std::size_t dim() const override { return inner_.dim(); }
    Embedding embed_sentence(const std::string& case_id, int sentence_id,
                             const std::string& text) override;

private:
    EmbeddingProvider& inner_;
    std::mutex mu_;
    std::unordered_map<std::string, Embedding> cache_;
};

/// dot(a,b) / (|a| |b|). Throws EmbeddingError on dimension mismatch or a
/// zero vector.
double cosine(std::span<const double> a, std::span<const double> b);

/// Immutable map from (case_id, sentence_id) to vector, covering every
/// sentence of the indexed cases. Safe for concurrent queries once built.
class VectorIndex {
public:
    static VectorIndex build(const std::vector<CaseStudy>& cases, EmbeddingProvider& provider);

    /// Throws EmbeddingError when the sentence is not covered.
    const Embedding& vector_for(const std::string& case_id, int sentence_id) const;

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::pair<std::string, int>, Embedding> entries_;
    std::size_t dim_ = 0;
};

/// Exhaustive exact cosine ranking of all sentences of the case against the
/// query vector; descending score, ties by ascending sentence id.
RankedList rank_sentences(const CaseStudy& cs, const Embedding& query_vec,
                          const VectorIndex& index);

} // namespace cliniqa
