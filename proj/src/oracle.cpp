#include "casumm/oracle.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <unordered_set>

#include "casumm/errors.hpp"
#include "casumm/rng.hpp"
#include "casumm/rouge.hpp"

namespace casumm {

using nlohmann::json;

namespace {

std::vector<std::string> lemmas_of(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lemmatize(t));
    return out;
}

// all singleton and in-window pair index lists, in tie-break order
std::vector<std::vector<int>> enumerate_candidates(int sentence_count, int pair_window) {
    std::vector<std::vector<int>> out;
    for (int i = 0; i < sentence_count; ++i) out.push_back({i});
    int window = std::min(sentence_count, pair_window);
    for (int i = 0; i < window; ++i)
        for (int j = i + 1; j < window; ++j) out.push_back({i, j});
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<std::string> candidate_tokens(const Document& doc, const std::vector<int>& idx) {
    detail::check(!idx.empty() && idx.size() <= 2, "candidate_tokens: need 1 or 2 indices");
    std::vector<std::string> tokens;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        detail::check(idx[k] >= 0 && idx[k] < static_cast<int>(doc.sentences.size()),
                      "candidate_tokens: sentence index out of range");
        if (k) tokens.emplace_back(kSepToken);
        const auto& sent = doc.sentences[static_cast<std::size_t>(idx[k])];
        tokens.insert(tokens.end(), sent.begin(), sent.end());
    }
    return tokens;
}

double alignment_metric(const std::vector<std::string>& candidate,
                        const std::vector<std::string>& ref_sentence) {
    auto cand_lem = lemmas_of(candidate);
    auto ref_lem = lemmas_of(ref_sentence);
    double r1 = rouge_n(cand_lem, ref_lem, 1).recall;
    double r2 = rouge_n(cand_lem, ref_lem, 2).recall;
    return 0.5 * (r1 + r2);
}

Alignment align_summary_sentence(const Document& doc, const std::vector<std::string>& ref_sentence,
                                 const OracleOptions& opts) {
    detail::check(!doc.sentences.empty(), "align_summary_sentence: document has no sentences");
    detail::check(!ref_sentence.empty(), "align_summary_sentence: empty reference sentence");

    Alignment best_single, best_pair;
    bool have_single = false, have_pair = false;
    for (const auto& idx : enumerate_candidates(static_cast<int>(doc.sentences.size()),
                                                opts.pair_window)) {
        double score = alignment_metric(candidate_tokens(doc, idx), ref_sentence);
        if (idx.size() == 1) {
            if (!have_single || score > best_single.score) {
                best_single = {idx, score};
                have_single = true;
            }
        } else {
            if (!have_pair || score > best_pair.score) {
                best_pair = {idx, score};
                have_pair = true;
            }
        }
    }
    // candidates are visited in tie-break order, so strict > keeps the first
    if (have_pair && best_pair.score > best_single.score + opts.pair_margin) return best_pair;
    return best_single;
}

std::vector<int> make_highlight_labels(const std::vector<std::string>& instance_tokens,
                                       const std::vector<std::string>& ref_sentence) {
    detail::check(!instance_tokens.empty(), "make_highlight_labels: empty instance tokens");
    detail::check(!ref_sentence.empty(), "make_highlight_labels: empty reference sentence");
    std::unordered_set<std::string> ref_lemmas;
    for (const auto& t : ref_sentence) ref_lemmas.insert(lemmatize(t));
    std::vector<int> labels(instance_tokens.size(), 0);
    for (std::size_t i = 0; i < instance_tokens.size(); ++i) {
        const auto& tok = instance_tokens[i];
        if (tok == kSepToken || is_punctuation(tok)) continue;
        if (ref_lemmas.count(lemmatize(tok))) labels[i] = 1;
    }
    return labels;
}

std::vector<int> smooth_labels(const std::vector<int>& mask,
                               const std::vector<std::string>& tokens) {
    if (mask.size() != tokens.size())
        throw DataError("smooth_labels: mask length " + std::to_string(mask.size()) +
                        " does not match token count " + std::to_string(tokens.size()));
    std::size_t n = mask.size();
    // bridge: fill single gaps between highlighted neighbours
    std::vector<int> bridged = mask;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (mask[i] == 0 && mask[i - 1] == 1 && mask[i + 1] == 1) bridged[i] = 1;
    }
    // isolate: drop highlighted stopwords with no highlighted neighbour
    std::vector<int> out = bridged;
    for (std::size_t i = 0; i < n; ++i) {
        if (bridged[i] != 1 || !is_stopword(tokens[i])) continue;
        int left = i > 0 ? bridged[i - 1] : 0;
        int right = i + 1 < n ? bridged[i + 1] : 0;
        if (left == 0 && right == 0) out[i] = 0;
    }
    return out;
}

std::vector<int> smoothed_gold_labels(const std::vector<std::string>& instance_tokens,
                                      const std::vector<std::string>& ref_sentence) {
    auto raw = make_highlight_labels(instance_tokens, ref_sentence);
    std::vector<int> out(instance_tokens.size(), 0);
    std::size_t span_start = 0;
    for (std::size_t i = 0; i <= instance_tokens.size(); ++i) {
        bool at_break = i == instance_tokens.size() || instance_tokens[i] == kSepToken;
        if (!at_break) continue;
        std::vector<int> span_mask(raw.begin() + static_cast<std::ptrdiff_t>(span_start),
                                   raw.begin() + static_cast<std::ptrdiff_t>(i));
        std::vector<std::string> span_toks(
            instance_tokens.begin() + static_cast<std::ptrdiff_t>(span_start),
            instance_tokens.begin() + static_cast<std::ptrdiff_t>(i));
        if (!span_mask.empty()) {
            auto smoothed = smooth_labels(span_mask, span_toks);
            std::copy(smoothed.begin(), smoothed.end(),
                      out.begin() + static_cast<std::ptrdiff_t>(span_start));
        }
        span_start = i + 1;
    }
    return out;
}

std::vector<Instance> build_instances(const std::vector<Document>& docs, int negative_ratio,
                                      unsigned seed, const OracleOptions& opts) {
    detail::check(negative_ratio >= 0, "build_instances: negative_ratio must be >= 0");
    Rng rng(seed);
    std::vector<Instance> out;
    for (const auto& doc : docs) {
        if (doc.summary.empty())
            throw DataError("build_instances: document has no summary: " + doc.id);

        std::vector<std::vector<int>> positives_idx;
        std::vector<Instance> positives;
        for (const auto& ref : doc.summary) {
            auto alignment = align_summary_sentence(doc, ref, opts);
            Instance inst;
            inst.doc_id = doc.id;
            inst.sent_idx = alignment.sent_idx;
            inst.tokens = candidate_tokens(doc, alignment.sent_idx);
            inst.label = 1;
            inst.target = ref;
            inst.highlights = smoothed_gold_labels(inst.tokens, ref);
            positives_idx.push_back(inst.sent_idx);
            positives.push_back(std::move(inst));
        }

        // negatives: uniform without replacement from non-aligned candidates
        std::vector<std::vector<int>> pool;
        for (auto& cand : enumerate_candidates(static_cast<int>(doc.sentences.size()),
                                               opts.pair_window)) {
            if (std::find(positives_idx.begin(), positives_idx.end(), cand) ==
                positives_idx.end())
                pool.push_back(std::move(cand));
        }
        for (std::size_t p = 0; p < positives.size(); ++p) {
            out.push_back(positives[p]);
            for (int k = 0; k < negative_ratio && !pool.empty(); ++k) {
                std::size_t pick = static_cast<std::size_t>(rng.below(pool.size()));
                Instance neg;
                neg.doc_id = doc.id;
                neg.sent_idx = pool[pick];
                neg.tokens = candidate_tokens(doc, neg.sent_idx);
                neg.label = 0;
                neg.highlights.assign(neg.tokens.size(), 0);
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
                out.push_back(std::move(neg));
            }
        }
    }
    return out;
}

void save_instances(const std::string& path, const std::vector<Instance>& instances) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open instance file for writing: " + path);
    for (const auto& inst : instances) {
        json rec;
        rec["doc_id"] = inst.doc_id;
        rec["sent_idx"] = inst.sent_idx;
        rec["tokens"] = inst.tokens;
        rec["label"] = inst.label;
        rec["highlights"] = inst.highlights;
        rec["target"] = inst.target;
        os << rec.dump() << "\n";
    }
    if (!os) throw DataError("instance write failed: " + path);
}

std::vector<Instance> load_instances(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open instance file: " + path);
    std::vector<Instance> out;
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("instance line " + std::to_string(line_no) +
                            ": malformed JSON: " + e.what());
        }
        for (const char* field : {"doc_id", "sent_idx", "tokens", "label", "highlights", "target"})
            if (!rec.contains(field))
                throw DataError("instance line " + std::to_string(line_no) +
                                ": missing field: " + field);
        Instance inst;
        inst.doc_id = rec["doc_id"].get<std::string>();
        inst.sent_idx = rec["sent_idx"].get<std::vector<int>>();
        inst.tokens = rec["tokens"].get<std::vector<std::string>>();
        inst.label = rec["label"].get<int>();
        inst.highlights = rec["highlights"].get<std::vector<int>>();
        inst.target = rec["target"].get<std::vector<std::string>>();
        if (inst.highlights.size() != inst.tokens.size())
            throw DataError("instance line " + std::to_string(line_no) +
                            ": highlights not aligned to tokens");
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<int> real_token_positions(const Instance& instance) {
    std::vector<int> out;
    for (std::size_t i = 0; i < instance.tokens.size(); ++i)
        if (instance.tokens[i] != kSepToken) out.push_back(static_cast<int>(i));
    return out;
}

}  // namespace casumm
