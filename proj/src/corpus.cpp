#include "casumm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "casumm/errors.hpp"

namespace casumm {

using nlohmann::json;

namespace {

bool is_ascii_punct(unsigned char c) {
    return std::ispunct(c) != 0;
}

bool is_ascii_space(unsigned char c) {
    return std::isspace(c) != 0;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (unsigned char c : text) {
        if (c < 0x80 && is_ascii_space(c)) {
            flush();
        } else if (c < 0x80 && is_ascii_punct(c)) {
            flush();
            tokens.emplace_back(1, static_cast<char>(c));
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return tokens;
}

bool is_punctuation(const std::string& token) {
    if (token.empty()) return false;
    for (unsigned char c : token) {
        if (c >= 0x80 || !is_ascii_punct(c)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Vocab

const std::array<const char*, Vocab::kReservedCount>& Vocab::reserved_tokens() {
    static const std::array<const char*, kReservedCount> kNames = {
        "<pad>", "<unk>", "<s>", "</s>", "<cls>", "<sep>"};
    return kNames;
}

int Vocab::id(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
    detail::check(id >= 0 && id < size(), "vocab id out of range");
    return id_to_token[static_cast<std::size_t>(id)];
}

void Vocab::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open vocab for writing: " + path);
    for (const auto& t : id_to_token) os << t << "\n";
    if (!os) throw DataError("vocab write failed: " + path);
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open vocab: " + path);
    Vocab v;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        v.token_to_id.emplace(line, v.size());
        v.id_to_token.push_back(line);
    }
    const auto& reserved = reserved_tokens();
    if (v.size() < kReservedCount)
        throw DataError("vocab too small, reserved entries missing: " + path);
    for (int i = 0; i < kReservedCount; ++i) {
        if (v.id_to_token[static_cast<std::size_t>(i)] != reserved[static_cast<std::size_t>(i)])
            throw DataError("vocab reserved entry mismatch at id " + std::to_string(i) +
                            " in " + path);
    }
    return v;
}

Vocab build_vocab(const std::vector<Document>& docs, int max_size) {
    detail::check(max_size > Vocab::kReservedCount,
                  "build_vocab: max_size must exceed the reserved token count");
    Vocab vocab;
    for (const char* t : Vocab::reserved_tokens()) {
        vocab.token_to_id.emplace(t, vocab.size());
        vocab.id_to_token.emplace_back(t);
    }

    struct Stat {
        long count = 0;
        long first_seen = 0;
    };
    std::unordered_map<std::string, Stat> stats;
    long position = 0;
    auto touch = [&](const std::vector<std::vector<std::string>>& sentences) {
        for (const auto& sent : sentences) {
            for (const auto& tok : sent) {
                auto [it, inserted] = stats.try_emplace(tok);
                if (inserted) it->second.first_seen = position;
                ++it->second.count;
                ++position;
            }
        }
    };
    for (const auto& doc : docs) {
        touch(doc.sentences);
        touch(doc.summary);
    }

    std::vector<std::pair<std::string, Stat>> ordered(stats.begin(), stats.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second.count != b.second.count) return a.second.count > b.second.count;
        return a.second.first_seen < b.second.first_seen;
    });
    for (const auto& [tok, stat] : ordered) {
        if (vocab.size() >= max_size) break;
        if (vocab.token_to_id.count(tok)) continue;  // reserved spelling in the data
        vocab.token_to_id.emplace(tok, vocab.size());
        vocab.id_to_token.push_back(tok);
    }
    return vocab;
}

// ---------------------------------------------------------------------------
// Corpus IO

std::vector<Document> load_corpus(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open corpus: " + path);
    std::vector<Document> docs;
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("corpus line " + std::to_string(line_no) +
                            ": malformed JSON: " + e.what());
        }
        auto where = "corpus line " + std::to_string(line_no);
        if (!rec.contains("id")) throw DataError(where + ": missing field: id");
        if (!rec.contains("document")) throw DataError(where + ": missing field: document");
        Document doc;
        doc.id = rec["id"].get<std::string>();
        if (doc.id.empty()) throw DataError(where + ": empty document id");
        for (const auto& sent : rec["document"]) {
            auto toks = tokenize(sent.get<std::string>());
            if (toks.empty())
                throw DataError(where + ": sentence empty after tokenization (doc " + doc.id + ")");
            doc.sentences.push_back(std::move(toks));
        }
        if (doc.sentences.empty()) throw DataError(where + ": document has no sentences");
        if (rec.contains("summary")) {
            for (const auto& sent : rec["summary"]) {
                auto toks = tokenize(sent.get<std::string>());
                if (toks.empty())
                    throw DataError(where + ": summary sentence empty after tokenization (doc " +
                                    doc.id + ")");
                doc.summary.push_back(std::move(toks));
            }
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

void save_corpus(const std::string& path, const std::vector<Document>& docs) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open corpus for writing: " + path);
    auto join = [](const std::vector<std::string>& toks) {
        std::string s;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (i) s += ' ';
            s += toks[i];
        }
        return s;
    };
    for (const auto& doc : docs) {
        json rec;
        rec["id"] = doc.id;
        auto& sents = rec["document"] = json::array();
        for (const auto& s : doc.sentences) sents.push_back(join(s));
        if (!doc.summary.empty()) {
            auto& refs = rec["summary"] = json::array();
            for (const auto& s : doc.summary) refs.push_back(join(s));
        }
        os << rec.dump() << "\n";
    }
    if (!os) throw DataError("corpus write failed: " + path);
}

}  // namespace casumm
