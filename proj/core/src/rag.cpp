#include "redloop/rag.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "redloop/errors.hpp"
#include "redloop/ptt.hpp"

namespace redloop {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Corpus c) {
    return c == Corpus::Techniques ? "techniques" : "success_cases";
}

Corpus corpus_from_string(const std::string& s) {
    if (s == "techniques") return Corpus::Techniques;
    if (s == "success_cases") return Corpus::SuccessCases;
    throw UnknownCorpus("unknown corpus: \"" + s + "\"");
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw BadDocument("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string markdown_title(const std::string& body, const fs::path& path) {
    std::istringstream ss(body);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.rfind("# ", 0) == 0) return line.substr(2);
    }
    return path.stem().string();
}

void flatten_node(const TaskNode& node, std::string& out) {
    out += node.title;
    out += '\n';
    out += node.detail;
    out += '\n';
    for (const ActResult& r : node.act_results) {
        out += r.command;
        out += '\n';
        out += r.log_summary;
        out += '\n';
    }
    for (const TaskNode& child : node.subtasks) flatten_node(child, out);
}

}  // namespace

std::string flatten_success_case(const std::string& ptt_json) {
    const Ptt ptt = parse_ptt(ptt_json);
    std::string out = ptt.metadata.target_description + "\n";
    flatten_node(ptt.root, out);
    return out;
}

void RagStore::add_document(RagDoc doc) {
    for (const RagDoc& d : docs_) {
        if (d.doc_id == doc.doc_id && d.corpus == doc.corpus) return;  // idempotent
    }
    docs_.push_back(std::move(doc));
}

IngestSummary RagStore::ingest(const fs::path& dir, Corpus corpus) {
    if (!fs::is_directory(dir)) throw BadDocument("not a directory: " + dir.string());
    IngestSummary summary;
    std::vector<fs::path> files;
    const std::string want_ext = corpus == Corpus::Techniques ? ".md" : ".json";
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == want_ext) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
        const std::string bytes = read_file(file);
        RagDoc doc;
        doc.doc_id = fnv1a64_hex(bytes);
        doc.corpus = corpus;
        doc.raw = bytes;
        doc.source_path = fs::relative(file, dir).string();
        if (corpus == Corpus::Techniques) {
            doc.title = markdown_title(bytes, file);
            doc.body = bytes;
        } else {
            try {
                doc.body = flatten_success_case(bytes);
            } catch (const Error& e) {
                throw BadDocument(file.string() + ": " + e.what());
            }
            doc.title = parse_ptt(bytes).metadata.target_description;
        }
        summary.tokens += tokenize(doc.body).size();
        const std::size_t before = docs_.size();
        add_document(std::move(doc));
        if (docs_.size() > before) ++summary.docs_added;
    }
    summary.docs_total = size(corpus);
    if (files.empty()) {
        summary.warnings.push_back("empty corpus: no " + want_ext + " files under " +
                                   dir.string());
    }
    return summary;
}

std::vector<RagHit> RagStore::query(Corpus corpus, const std::string& q, int k) const {
    std::vector<const RagDoc*> docs;
    for (const RagDoc& d : docs_) {
        if (d.corpus == corpus) docs.push_back(&d);
    }
    const std::size_t n = docs.size();
    if (n == 0 || k <= 0) return {};

    std::vector<std::vector<std::string>> doc_tokens(n);
    double total_len = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        doc_tokens[i] = tokenize(docs[i]->body);
        total_len += static_cast<double>(doc_tokens[i].size());
    }
    const double avgdl = total_len / static_cast<double>(n);

    const std::vector<std::string> q_tokens = tokenize(q);
    const std::set<std::string> terms(q_tokens.begin(), q_tokens.end());

    std::vector<RagHit> hits;
    for (std::size_t i = 0; i < n; ++i) {
        std::unordered_map<std::string, std::size_t> tf;
        for (const std::string& t : doc_tokens[i]) ++tf[t];
        double score = 0.0;
        for (const std::string& t : terms) {
            auto it = tf.find(t);
            if (it == tf.end()) continue;
            std::size_t df = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (std::find(doc_tokens[j].begin(), doc_tokens[j].end(), t) !=
                    doc_tokens[j].end()) {
                    ++df;
                }
            }
            const double idf = std::log(
                1.0 + (static_cast<double>(n) - static_cast<double>(df) + 0.5) /
                          (static_cast<double>(df) + 0.5));
            const double freq = static_cast<double>(it->second);
            const double dl = static_cast<double>(doc_tokens[i].size());
            score += idf * freq * (kK1 + 1.0) / (freq + kK1 * (1.0 - kB + kB * dl / avgdl));
        }
        if (score > 0.0) hits.push_back(RagHit{docs[i], score, 0});
    }
    std::sort(hits.begin(), hits.end(), [](const RagHit& a, const RagHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc->doc_id < b.doc->doc_id;
    });
    if (hits.size() > static_cast<std::size_t>(k)) hits.resize(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = static_cast<int>(i) + 1;
    return hits;
}

const RagDoc* RagStore::find(const std::string& doc_id) const {
    for (const RagDoc& d : docs_) {
        if (d.doc_id == doc_id) return &d;
    }
    return nullptr;
}

std::size_t RagStore::size(Corpus corpus) const {
    std::size_t n = 0;
    for (const RagDoc& d : docs_) {
        if (d.corpus == corpus) ++n;
    }
    return n;
}

namespace {
constexpr const char* kIndexMagic = "RLIX1";
}

void RagStore::save(const fs::path& file) const {
    json docs = json::array();
    for (const RagDoc& d : docs_) {
        docs.push_back({{"doc_id", d.doc_id},
                        {"corpus", to_string(d.corpus)},
                        {"title", d.title},
                        {"body", d.body},
                        {"raw", d.raw},
                        {"source_path", d.source_path}});
    }
    fs::create_directories(file.parent_path().empty() ? "." : file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw BadDocument("cannot write index file " + file.string());
    out << kIndexMagic << "\n" << docs.dump() << "\n";
}

RagStore RagStore::load(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw BadDocument("cannot read index file " + file.string());
    std::string magic;
    std::getline(in, magic);
    if (magic != kIndexMagic) {
        throw BadDocument("bad index magic in " + file.string() + " (expected " + kIndexMagic +
                          ")");
    }
    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    RagStore store;
    for (const auto& j : json::parse(payload)) {
        RagDoc d;
        d.doc_id = j.at("doc_id").get<std::string>();
        d.corpus = corpus_from_string(j.at("corpus").get<std::string>());
        d.title = j.at("title").get<std::string>();
        d.body = j.at("body").get<std::string>();
        d.raw = j.value("raw", std::string());
        d.source_path = j.at("source_path").get<std::string>();
        store.docs_.push_back(std::move(d));
    }
    return store;
}

}  // namespace redloop
