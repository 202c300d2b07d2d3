#include "casumm/strategy.hpp"

#include <algorithm>
#include <cmath>

#include "casumm/errors.hpp"

namespace casumm {

const char* strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::threshold: return "threshold";
        case StrategyKind::prop_instance: return "prop_instance";
        case StrategyKind::prop_document: return "prop_document";
    }
    return "?";
}

StrategyKind strategy_from_name(const std::string& name) {
    if (name == "threshold") return StrategyKind::threshold;
    if (name == "prop_instance") return StrategyKind::prop_instance;
    if (name == "prop_document") return StrategyKind::prop_document;
    throw ConfigError("unknown strategy: " + name +
                      " (expected threshold, prop_instance or prop_document)");
}

int HighlightMask::popcount() const {
    int n = 0;
    for (int b : bits) n += b;
    return n;
}

HighlightMask threshold_highlight(const std::vector<double>& probs, double tau) {
    tau = std::clamp(tau, 0.0, 1.0);
    HighlightMask mask;
    mask.source = StrategyKind::threshold;
    mask.parameter = tau;
    mask.bits.reserve(probs.size());
    for (double p : probs) mask.bits.push_back(p >= tau ? 1 : 0);
    return mask;
}

std::vector<HighlightMask> proportional_highlight(
    const std::vector<std::vector<double>>& prob_groups, double rate, StrategyKind scope) {
    detail::check(rate >= 0.0 && rate <= 1.0, "proportional_highlight: rate must be in [0,1]");
    detail::check(scope == StrategyKind::prop_instance || scope == StrategyKind::prop_document,
                  "proportional_highlight: scope must be prop_instance or prop_document");

    std::vector<HighlightMask> masks(prob_groups.size());
    for (std::size_t g = 0; g < prob_groups.size(); ++g) {
        masks[g].source = scope;
        masks[g].parameter = rate;
        masks[g].bits.assign(prob_groups[g].size(), 0);
    }

    // (group, position) pairs sorted by descending probability, earlier
    // position first on ties
    auto ranked_positions = [&](const std::vector<std::pair<std::size_t, std::size_t>>& span) {
        auto order = span;
        std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
            return prob_groups[a.first][a.second] > prob_groups[b.first][b.second];
        });
        return order;
    };

    if (scope == StrategyKind::prop_instance) {
        for (std::size_t g = 0; g < prob_groups.size(); ++g) {
            std::size_t n = prob_groups[g].size();
            if (n == 0) continue;
            auto budget = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n)));
            std::vector<std::pair<std::size_t, std::size_t>> span;
            for (std::size_t i = 0; i < n; ++i) span.emplace_back(g, i);
            auto order = ranked_positions(span);
            for (std::size_t k = 0; k < budget; ++k) masks[order[k].first].bits[order[k].second] = 1;
        }
    } else {
        std::vector<std::pair<std::size_t, std::size_t>> span;
        for (std::size_t g = 0; g < prob_groups.size(); ++g)
            for (std::size_t i = 0; i < prob_groups[g].size(); ++i) span.emplace_back(g, i);
        if (!span.empty()) {
            auto budget =
                static_cast<std::size_t>(std::ceil(rate * static_cast<double>(span.size())));
            auto order = ranked_positions(span);
            for (std::size_t k = 0; k < budget; ++k) masks[order[k].first].bits[order[k].second] = 1;
        }
    }
    return masks;
}

double highlight_rate(const std::vector<HighlightMask>& masks) {
    detail::check(!masks.empty(), "highlight_rate: no masks");
    long ones = 0, total = 0;
    for (const auto& m : masks) {
        ones += m.popcount();
        total += static_cast<long>(m.bits.size());
    }
    detail::check(total > 0, "highlight_rate: masks contain no bits");
    return static_cast<double>(ones) / static_cast<double>(total);
}

}  // namespace casumm
