#pragma once

#include <map>
#include <string>
#include <vector>

namespace casumm {

struct RougeScore {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

using TokenList = std::vector<std::string>;

// Clipped n-gram overlap (multiset counts). A reference shorter than n has
// recall 0; a candidate shorter than n has precision 0.
RougeScore rouge_n(const TokenList& candidate, const TokenList& reference, int n);

// LCS-based score over single sequences: recall = LCS / |reference|,
// precision = LCS / |candidate|.
RougeScore rouge_l(const TokenList& candidate, const TokenList& reference);

// Document-level scores. R-1/R-2 concatenate all sentences on both sides.
// R-L follows the summary-level union-LCS formula: for each reference
// sentence, the LCS against every candidate sentence is computed and the
// matched reference positions are unioned (canonical leftmost backtrack:
// matching tokens pair greedily from the sequence ends, ties between moves
// prefer the reference side). Recall divides the union sizes by the total
// reference length, precision by the total candidate length.
std::map<std::string, RougeScore> rouge_summary(const std::vector<TokenList>& candidate_sentences,
                                                const std::vector<TokenList>& reference_sentences);

// Length of the longest common subsequence.
int lcs_length(const TokenList& a, const TokenList& b);

inline double f1_score(double recall, double precision) {
    double denom = recall + precision;
    return denom == 0.0 ? 0.0 : 2.0 * recall * precision / denom;
}

}  // namespace casumm
