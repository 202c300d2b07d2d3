#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

namespace casumm {

// Tokenized source document with optional reference summary. Sentences are
// provided pre-split by the corpus format; no boundary detection happens
// here.
struct Document {
    std::string id;
    std::vector<std::vector<std::string>> sentences;
    std::vector<std::vector<std::string>> summary;  // empty for inference-only input
};

// Lowercases, splits punctuation characters into single-character tokens,
// and collapses whitespace. Pure and deterministic.
std::vector<std::string> tokenize(const std::string& text);

// Lookup-table lemmatizer with suffix stripping for -s/-es/-ies/-ed/-ing.
// Unknown tokens map to themselves after the suffix rules. Idempotent.
std::string lemmatize(const std::string& token);

// Membership in the bundled stopword list (see stopword_list_version()).
bool is_stopword(const std::string& token);
const std::vector<std::string>& stopword_list();
const char* stopword_list_version();

// True when the token consists solely of punctuation characters.
bool is_punctuation(const std::string& token);

// Token inventory shared by the selector and fusion models. Ids 0..5 are
// reserved; all remaining ids map 1:1 to corpus tokens.
struct Vocab {
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;
    static constexpr int kCls = 4;
    static constexpr int kSep = 5;
    static constexpr int kReservedCount = 6;
    static const std::array<const char*, kReservedCount>& reserved_tokens();

    std::unordered_map<std::string, int> token_to_id;
    std::vector<std::string> id_to_token;

    int id(const std::string& token) const;  // kUnk when absent
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(id_to_token.size()); }

    void save(const std::string& path) const;
    static Vocab load(const std::string& path);
};

// The token string used both as the reserved SEP entry and as the marker
// between the two sentences of a pair instance.
inline const char* kSepToken = "<sep>";

// max_size caps the total vocabulary including the reserved entries.
Vocab build_vocab(const std::vector<Document>& docs, int max_size);

// Corpus line format: one JSON record per line with fields "id",
// "document" (list of sentence strings) and optional "summary".
std::vector<Document> load_corpus(const std::string& path);
void save_corpus(const std::string& path, const std::vector<Document>& docs);

}  // namespace casumm
