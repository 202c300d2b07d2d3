#pragma once

#include <string>
#include <vector>

#include "casumm/corpus.hpp"

namespace casumm {

// One training/scoring unit: a sentence singleton or pair. Pair tokens are
// flattened with a <sep> marker between the two sentences.
struct Instance {
    std::string doc_id;
    std::vector<int> sent_idx;           // 1 or 2 ascending indices
    std::vector<std::string> tokens;     // flattened, with kSepToken between pairs
    int label = 0;                       // 1 positive, 0 negative
    std::vector<int> highlights;         // aligned to tokens, all zero on negatives
    std::vector<std::string> target;     // aligned reference sentence, empty on negatives
};

struct Alignment {
    std::vector<int> sent_idx;  // ascending
    double score = 0.0;
};

struct OracleOptions {
    double pair_margin = 0.02;  // pair must beat the best singleton by this much
    int pair_window = 30;       // pairs drawn from the first N sentences
};

// Candidate tokens for the given sentence indices (inserts kSepToken for
// pairs).
std::vector<std::string> candidate_tokens(const Document& doc, const std::vector<int>& idx);

// Enumerates every singleton and every in-window pair; scores each by the
// mean of ROUGE-1 and ROUGE-2 recall of the reference against the
// lemmatized candidate; prefers the best singleton unless the best pair
// beats it by pair_margin. Ties break toward lower indices.
Alignment align_summary_sentence(const Document& doc, const std::vector<std::string>& ref_sentence,
                                 const OracleOptions& opts = {});

// Alignment metric for one candidate (exposed for brute-force verification).
double alignment_metric(const std::vector<std::string>& candidate_tokens,
                        const std::vector<std::string>& ref_sentence);

// 1 where the token's lemma occurs among the reference lemmas and the token
// is not punctuation; the <sep> marker is always 0.
std::vector<int> make_highlight_labels(const std::vector<std::string>& instance_tokens,
                                       const std::vector<std::string>& ref_sentence);

// Bridge-then-isolate smoothing, one pass each against a snapshot of the
// incoming mask: a 0 between two 1s becomes 1, then a highlighted stopword
// with no highlighted neighbour becomes 0.
std::vector<int> smooth_labels(const std::vector<int>& mask,
                               const std::vector<std::string>& tokens);

// Raw labels followed by smoothing applied to each sentence span
// independently; the <sep> marker never bridges across sentences.
std::vector<int> smoothed_gold_labels(const std::vector<std::string>& instance_tokens,
                                      const std::vector<std::string>& ref_sentence);

// Builds one positive instance per reference sentence plus negative_ratio
// sampled negatives per positive. Positive highlight labels are smoothed
// per sentence span. Deterministic given the seed.
std::vector<Instance> build_instances(const std::vector<Document>& docs, int negative_ratio,
                                      unsigned seed, const OracleOptions& opts = {});

// Instance line format: one JSON record per line with fields doc_id,
// sent_idx, tokens, label, highlights, target.
void save_instances(const std::string& path, const std::vector<Instance>& instances);
std::vector<Instance> load_instances(const std::string& path);

// Positions of the real (non-marker) tokens within instance.tokens.
std::vector<int> real_token_positions(const Instance& instance);

}  // namespace casumm
