#pragma once

#include <string>
#include <vector>

namespace casumm {

enum class StrategyKind { threshold, prop_instance, prop_document };

const char* strategy_name(StrategyKind kind);
StrategyKind strategy_from_name(const std::string& name);

// Binary highlight decision over an instance's real tokens.
struct HighlightMask {
    std::vector<int> bits;
    StrategyKind source = StrategyKind::threshold;
    double parameter = 0.0;  // threshold value or target rate

    int popcount() const;
};

// bits[i] = 1 iff probs[i] >= tau (inclusive, so tau=0 highlights all).
// tau is clamped into [0,1].
HighlightMask threshold_highlight(const std::vector<double>& probs, double tau);

// Highlights the ceil(rate*N) highest-probability positions per budget.
// Instance scope budgets each group separately; document scope spends one
// budget over the concatenation. Ties break toward earlier positions.
std::vector<HighlightMask> proportional_highlight(
    const std::vector<std::vector<double>>& prob_groups, double rate, StrategyKind scope);

// Total ones over total bits.
double highlight_rate(const std::vector<HighlightMask>& masks);

}  // namespace casumm
