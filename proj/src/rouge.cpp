#include "casumm/rouge.hpp"

#include <algorithm>
#include <unordered_map>

#include "casumm/errors.hpp"

namespace casumm {

namespace {

// joins n tokens with a separator unlikely to appear in text
std::unordered_map<std::string, int> ngram_counts(const TokenList& tokens, int n) {
    std::unordered_map<std::string, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (int j = 0; j < n; ++j) {
            if (j) key.push_back('\x1f');
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

std::vector<std::vector<int>> lcs_table(const TokenList& a, const TokenList& b) {
    std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1
                                            : std::max(dp[i - 1][j], dp[i][j - 1]);
    return dp;
}

// Reference positions matched by the canonical LCS of (reference, candidate).
// Backtracks from the sequence ends, taking every equal-token match and
// otherwise preferring to advance the reference index on ties.
std::vector<bool> lcs_reference_matches(const TokenList& reference, const TokenList& candidate) {
    auto dp = lcs_table(reference, candidate);
    std::vector<bool> hit(reference.size(), false);
    std::size_t i = reference.size(), j = candidate.size();
    while (i > 0 && j > 0) {
        if (reference[i - 1] == candidate[j - 1]) {
            hit[i - 1] = true;
            --i;
            --j;
        } else if (dp[i - 1][j] >= dp[i][j - 1]) {
            --i;
        } else {
            --j;
        }
    }
    return hit;
}

TokenList concatenate(const std::vector<TokenList>& sentences) {
    TokenList out;
    for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
    return out;
}

}  // namespace

int lcs_length(const TokenList& a, const TokenList& b) {
    if (a.empty() || b.empty()) return 0;
    return lcs_table(a, b)[a.size()][b.size()];
}

RougeScore rouge_n(const TokenList& candidate, const TokenList& reference, int n) {
    detail::check(n >= 1, "rouge_n: n must be >= 1");
    RougeScore score;
    auto cand = ngram_counts(candidate, n);
    auto ref = ngram_counts(reference, n);
    long cand_total = 0, ref_total = 0, matched = 0;
    for (const auto& [k, c] : cand) cand_total += c;
    for (const auto& [k, c] : ref) {
        ref_total += c;
        auto it = cand.find(k);
        if (it != cand.end()) matched += std::min(c, it->second);
    }
    score.recall = ref_total == 0 ? 0.0 : static_cast<double>(matched) / ref_total;
    score.precision = cand_total == 0 ? 0.0 : static_cast<double>(matched) / cand_total;
    score.f1 = f1_score(score.recall, score.precision);
    return score;
}

RougeScore rouge_l(const TokenList& candidate, const TokenList& reference) {
    RougeScore score;
    if (candidate.empty() || reference.empty()) return score;
    int lcs = lcs_length(candidate, reference);
    score.recall = static_cast<double>(lcs) / reference.size();
    score.precision = static_cast<double>(lcs) / candidate.size();
    score.f1 = f1_score(score.recall, score.precision);
    return score;
}

std::map<std::string, RougeScore> rouge_summary(const std::vector<TokenList>& candidate_sentences,
                                                const std::vector<TokenList>& reference_sentences) {
    std::map<std::string, RougeScore> out;
    TokenList cand = concatenate(candidate_sentences);
    TokenList ref = concatenate(reference_sentences);
    out["rouge1"] = rouge_n(cand, ref, 1);
    out["rouge2"] = rouge_n(cand, ref, 2);

    RougeScore rl;
    long union_total = 0;
    for (const auto& ref_sent : reference_sentences) {
        std::vector<bool> covered(ref_sent.size(), false);
        for (const auto& cand_sent : candidate_sentences) {
            if (cand_sent.empty() || ref_sent.empty()) continue;
            auto hit = lcs_reference_matches(ref_sent, cand_sent);
            for (std::size_t i = 0; i < hit.size(); ++i)
                if (hit[i]) covered[i] = true;
        }
        for (bool b : covered) union_total += b ? 1 : 0;
    }
    rl.recall = ref.empty() ? 0.0 : static_cast<double>(union_total) / ref.size();
    rl.precision = cand.empty() ? 0.0 : static_cast<double>(union_total) / cand.size();
    rl.f1 = f1_score(rl.recall, rl.precision);
    out["rougeL"] = rl;
    return out;
}

}  // namespace casumm
