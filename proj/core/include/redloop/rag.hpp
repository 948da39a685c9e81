#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace redloop {

enum class Corpus { Techniques, SuccessCases };

std::string to_string(Corpus c);
Corpus corpus_from_string(const std::string& s);

struct RagDoc {
    std::string doc_id;  // stable content hash (fnv1a-64 hex of raw bytes)
    Corpus corpus = Corpus::Techniques;
    std::string title;
    std::string body;  // indexed text (success cases are flattened)
    std::string raw;   // original file bytes
    std::string source_path;
};

struct RagHit {
    const RagDoc* doc = nullptr;
    double score = 0.0;
    int rank = 0;
};

struct IngestSummary {
    std::size_t docs_added = 0;
    std::size_t docs_total = 0;
    std::size_t tokens = 0;
    std::vector<std::string> warnings;
};

/// Lowercased alphanumeric token stream used for both indexing and queries.
std::vector<std::string> tokenize(const std::string& text);

std::string fnv1a64_hex(const std::string& bytes);

/// Lexical document store over the two retrieval corpora. Scoring is Okapi
/// BM25 with k1=1.2, b=0.75 and the non-negative idf variant
/// ln(1 + (N - df + 0.5) / (df + 0.5)); unique query terms each score once.
class RagStore {
public:
    static constexpr double kK1 = 1.2;
    static constexpr double kB = 0.75;

    /// Ingests *.md (techniques) or *.json success-case PTTs (validated via
    /// parse_ptt and flattened to text). Idempotent on identical bytes.
    /// Throws BadDocument naming the offending file.
    IngestSummary ingest(const std::filesystem::path& dir, Corpus corpus);

    /// Adds a single pre-built document (used by tests and fixtures).
    void add_document(RagDoc doc);

    /// Top-k hits by descending BM25 score, ties broken by ascending doc_id.
    /// Zero-score documents are never returned.
    std::vector<RagHit> query(Corpus corpus, const std::string& q, int k) const;

    const RagDoc* find(const std::string& doc_id) const;
    std::size_t size(Corpus corpus) const;

    /// Persists the whole store as a single versioned file (magic header
    /// "RLIX1"). load() rejects anything else.
    void save(const std::filesystem::path& file) const;
    static RagStore load(const std::filesystem::path& file);

private:
    std::vector<RagDoc> docs_;
};

/// Flattens a success-case PTT document to indexable text: titles, details,
/// commands and log summaries concatenated, so service names and port
/// numbers are matchable.
std::string flatten_success_case(const std::string& ptt_json);

}  // namespace redloop
