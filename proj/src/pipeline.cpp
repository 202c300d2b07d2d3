#include "casumm/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "casumm/errors.hpp"

namespace casumm {

using nlohmann::json;

OracleMode oracle_mode_from_name(const std::string& name) {
    if (name == "gt_sent_sys_tag") return OracleMode::gt_sent_sys_tag;
    if (name == "gt_sent_gt_tag") return OracleMode::gt_sent_gt_tag;
    if (name == "gt_sent_gt_tag_fusion") return OracleMode::gt_sent_gt_tag_fusion;
    throw ConfigError("unknown oracle mode: " + name +
                      " (expected gt_sent_sys_tag, gt_sent_gt_tag or gt_sent_gt_tag_fusion)");
}

SelectorConfig RunConfig::selector_config(int vocab_count) const {
    SelectorConfig c;
    c.vocab_size = vocab_count;
    c.layers = sel_layers;
    c.heads = sel_heads;
    c.d_model = sel_dim;
    c.d_ff = sel_ff;
    c.max_len = sel_max_len;
    return c;
}

FusionConfig RunConfig::fusion_config(int vocab_count) const {
    FusionConfig c;
    c.vocab_size = vocab_count;
    c.d_emb = fus_emb;
    c.d_hid = fus_hidden;
    c.coverage = coverage;
    return c;
}

TrainConfig RunConfig::train_config(const std::string& checkpoint_path) const {
    TrainConfig c;
    c.lambda = lambda;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.seed = seed;
    c.adam.lr = lr;
    c.loss_mode = loss_mode;
    c.checkpoint_path = checkpoint_path;
    c.keep_epoch_checkpoints = epoch_checkpoints;
    c.quiet = false;
    return c;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an integer: " + value);
    }
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: " + value);
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config key " + key + ": not a boolean: " + value);
}

}  // namespace

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "corpus") config.corpus = value;
    else if (key == "instances") config.instances = value;
    else if (key == "vocab") config.vocab = value;
    else if (key == "selector_ckpt") config.selector_ckpt = value;
    else if (key == "fusion_ckpt") config.fusion_ckpt = value;
    else if (key == "output") config.output = value;
    else if (key == "summaries") config.summaries = value;
    else if (key == "eval_csv") config.eval_csv = value;
    else if (key == "train_log") config.train_log = value;
    else if (key == "k") config.k = to_int(key, value);
    else if (key == "strategy") config.strategy = strategy_from_name(value);
    else if (key == "strategy_param") config.strategy_param = to_double(key, value);
    else if (key == "beam_width") config.beam_width = to_int(key, value);
    else if (key == "max_len") config.max_len = to_int(key, value);
    else if (key == "order") {
        if (value == "rank") config.order = OrderMode::rank;
        else if (value == "document") config.order = OrderMode::document;
        else throw ConfigError("config key order: expected rank or document, got " + value);
    } else if (key == "disjoint") config.disjoint = to_bool(key, value);
    else if (key == "trace") config.trace = to_bool(key, value);
    else if (key == "negative_ratio") config.negative_ratio = to_int(key, value);
    else if (key == "pair_margin") config.pair_margin = to_double(key, value);
    else if (key == "pair_window") config.pair_window = to_int(key, value);
    else if (key == "vocab_size") config.vocab_size = to_int(key, value);
    else if (key == "lambda") config.lambda = to_double(key, value);
    else if (key == "seed") config.seed = static_cast<unsigned>(to_int(key, value));
    else if (key == "epochs") config.epochs = to_int(key, value);
    else if (key == "batch_size") config.batch_size = to_int(key, value);
    else if (key == "lr") config.lr = to_double(key, value);
    else if (key == "loss_mode") {
        if (value == "convex") config.loss_mode = LossMode::convex;
        else if (value == "additive") config.loss_mode = LossMode::additive;
        else throw ConfigError("config key loss_mode: expected convex or additive, got " + value);
    } else if (key == "epoch_checkpoints") config.epoch_checkpoints = to_bool(key, value);
    else if (key == "sel_layers") config.sel_layers = to_int(key, value);
    else if (key == "sel_heads") config.sel_heads = to_int(key, value);
    else if (key == "sel_dim") config.sel_dim = to_int(key, value);
    else if (key == "sel_ff") config.sel_ff = to_int(key, value);
    else if (key == "sel_max_len") config.sel_max_len = to_int(key, value);
    else if (key == "fus_emb") config.fus_emb = to_int(key, value);
    else if (key == "fus_hidden") config.fus_hidden = to_int(key, value);
    else if (key == "coverage") config.coverage = to_bool(key, value);
    else if (key == "grid") config.grid = value;
    else if (key == "strategies") config.strategies = value;
    else throw ConfigError("unknown config key: " + key);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    RunConfig config;
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        apply_config_entry(config, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return config;
}

// ---------------------------------------------------------------------------
// Summary IO

void save_summaries(const std::string& path, const std::vector<SummaryOutput>& outputs) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open summary file for writing: " + path);
    for (const auto& out : outputs) {
        json rec;
        rec["doc_id"] = out.doc_id;
        rec["sentences"] = out.sentences;
        auto& prov = rec["provenance"] = json::array();
        for (const auto& p : out.provenance) {
            json entry;
            entry["sent_idx"] = p.sent_idx;
            entry["p_sent"] = p.p_sent;
            entry["mask"] = p.mask;
            entry["strategy"] = p.strategy;
            prov.push_back(std::move(entry));
        }
        os << rec.dump() << "\n";
    }
    if (!os) throw DataError("summary write failed: " + path);
}

std::vector<SummaryOutput> load_summaries(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open summary file: " + path);
    std::vector<SummaryOutput> outputs;
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("summary line " + std::to_string(line_no) +
                            ": malformed JSON: " + e.what());
        }
        for (const char* field : {"doc_id", "sentences", "provenance"})
            if (!rec.contains(field))
                throw DataError("summary line " + std::to_string(line_no) +
                                ": missing field: " + field);
        SummaryOutput out;
        out.doc_id = rec["doc_id"].get<std::string>();
        out.sentences = rec["sentences"].get<std::vector<std::vector<std::string>>>();
        for (const auto& p : rec["provenance"]) {
            ProvenanceEntry entry;
            entry.sent_idx = p["sent_idx"].get<std::vector<int>>();
            entry.p_sent = p["p_sent"].get<double>();
            entry.mask = p["mask"].get<std::vector<int>>();
            entry.strategy = p["strategy"].get<std::string>();
            out.provenance.push_back(std::move(entry));
        }
        outputs.push_back(std::move(out));
    }
    return outputs;
}

// ---------------------------------------------------------------------------
// Cascade

namespace {

// strategy masks for a document's instances, honoring document scope
std::vector<HighlightMask> masks_for(const std::vector<std::vector<double>>& prob_groups,
                                     const RunConfig& config) {
    if (config.strategy == StrategyKind::threshold) {
        std::vector<HighlightMask> masks;
        masks.reserve(prob_groups.size());
        for (const auto& probs : prob_groups)
            masks.push_back(threshold_highlight(probs, config.strategy_param));
        return masks;
    }
    return proportional_highlight(prob_groups, config.strategy_param, config.strategy);
}

void apply_fallback(HighlightMask& mask, const std::vector<double>& probs,
                    const std::string& doc_id) {
    if (mask.bits.empty() || mask.popcount() > 0) return;
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[best]) best = i;
    mask.bits[best] = 1;
    std::cerr << "[warn] all-zero highlight mask for doc " << doc_id
              << "; highlighting the top-probability token\n";
}

std::vector<std::string> extract_highlighted(const Instance& inst,
                                             const HighlightMask& mask) {
    auto real = real_token_positions(inst);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < real.size(); ++i)
        if (mask.bits[i])
            out.push_back(inst.tokens[static_cast<std::size_t>(real[i])]);
    return out;
}

void reorder_output(SummaryOutput& out, const RunConfig& config) {
    if (config.order != OrderMode::document) return;
    std::vector<std::size_t> order(out.sentences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return out.provenance[a].sent_idx.front() < out.provenance[b].sent_idx.front();
    });
    SummaryOutput sorted;
    sorted.doc_id = out.doc_id;
    for (std::size_t i : order) {
        sorted.sentences.push_back(std::move(out.sentences[i]));
        sorted.provenance.push_back(std::move(out.provenance[i]));
    }
    out = std::move(sorted);
}

void write_trace(const Instance& inst, const GenerationResult& gen) {
    for (std::size_t step = 0; step < gen.provenance.size(); ++step) {
        const auto& p = gen.provenance[step];
        std::cerr << "[trace] doc " << inst.doc_id << " step " << step + 1 << " token "
                  << p.token << " p_gen " << std::setprecision(4) << p.p_gen
                  << " src_pos " << p.source_position << "\n";
    }
}

}  // namespace

SummaryOutput summarize(const Document& doc, const SelectorModel& selector,
                        const FusionModel& fusion, const Vocab& vocab, const RunConfig& config) {
    SummaryOutput out;
    out.doc_id = doc.id;
    auto ranked = rank_instances(doc, selector, vocab, config.k, config.rank_options());

    std::vector<std::vector<double>> prob_groups;
    prob_groups.reserve(ranked.size());
    for (const auto& entry : ranked)
        prob_groups.push_back(score_instance(entry.instance, selector, vocab).token_probs);
    auto masks = masks_for(prob_groups, config);

    for (std::size_t i = 0; i < ranked.size(); ++i) {
        apply_fallback(masks[i], prob_groups[i], doc.id);
        const Instance& inst = ranked[i].instance;
        auto bits = expand_mask_to_tokens(inst, masks[i].bits);
        auto gen = generate(inst, bits, fusion, vocab, config.beam_width, config.max_len);
        if (config.trace) write_trace(inst, gen);
        out.sentences.push_back(gen.tokens);
        ProvenanceEntry prov;
        prov.sent_idx = inst.sent_idx;
        prov.p_sent = ranked[i].p_sent;
        prov.mask = masks[i].bits;
        prov.strategy = strategy_name(config.strategy);
        out.provenance.push_back(std::move(prov));
    }
    reorder_output(out, config);
    return out;
}

SummaryOutput extract_tag_summary(const Document& doc, const SelectorModel& selector,
                                  const Vocab& vocab, const RunConfig& config) {
    SummaryOutput out;
    out.doc_id = doc.id;
    auto ranked = rank_instances(doc, selector, vocab, config.k, config.rank_options());

    std::vector<std::vector<double>> prob_groups;
    prob_groups.reserve(ranked.size());
    for (const auto& entry : ranked)
        prob_groups.push_back(score_instance(entry.instance, selector, vocab).token_probs);
    auto masks = masks_for(prob_groups, config);

    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const Instance& inst = ranked[i].instance;
        auto sentence = extract_highlighted(inst, masks[i]);
        if (sentence.empty())
            std::cerr << "[warn] empty tagged extraction for doc " << doc.id << "\n";
        out.sentences.push_back(std::move(sentence));
        ProvenanceEntry prov;
        prov.sent_idx = inst.sent_idx;
        prov.p_sent = ranked[i].p_sent;
        prov.mask = masks[i].bits;
        prov.strategy = strategy_name(config.strategy);
        out.provenance.push_back(std::move(prov));
    }
    reorder_output(out, config);
    return out;
}

SummaryOutput oracle_summarize(const Document& doc, OracleMode mode,
                               const SelectorModel* selector, const FusionModel* fusion,
                               const Vocab& vocab, const RunConfig& config) {
    if (doc.summary.empty())
        throw DataError("oracle_summarize: document has no references: " + doc.id);
    if (mode == OracleMode::gt_sent_sys_tag && !selector)
        throw ConfigError("oracle_summarize: gt_sent_sys_tag requires a selector model");
    if (mode == OracleMode::gt_sent_gt_tag_fusion && !fusion)
        throw ConfigError("oracle_summarize: gt_sent_gt_tag_fusion requires a fusion model");

    SummaryOutput out;
    out.doc_id = doc.id;

    // ground-truth sentence selection: one instance per reference
    std::vector<Instance> instances;
    std::vector<double> align_scores;
    for (const auto& ref : doc.summary) {
        auto alignment = align_summary_sentence(doc, ref, config.oracle_options());
        Instance inst;
        inst.doc_id = doc.id;
        inst.sent_idx = alignment.sent_idx;
        inst.tokens = candidate_tokens(doc, alignment.sent_idx);
        inst.label = 1;
        inst.target = ref;
        inst.highlights = smoothed_gold_labels(inst.tokens, ref);
        instances.push_back(std::move(inst));
        align_scores.push_back(alignment.score);
    }

    std::vector<HighlightMask> masks;
    std::string tag;
    if (mode == OracleMode::gt_sent_sys_tag) {
        std::vector<std::vector<double>> prob_groups;
        for (const auto& inst : instances)
            prob_groups.push_back(score_instance(inst, *selector, vocab).token_probs);
        masks = masks_for(prob_groups, config);
        tag = strategy_name(config.strategy);
    } else {
        for (const auto& inst : instances) {
            HighlightMask mask;
            auto real = real_token_positions(inst);
            for (int pos : real)
                mask.bits.push_back(inst.highlights[static_cast<std::size_t>(pos)]);
            masks.push_back(std::move(mask));
        }
        tag = "gt_tag";
    }

    for (std::size_t i = 0; i < instances.size(); ++i) {
        const Instance& inst = instances[i];
        std::vector<std::string> sentence;
        if (mode == OracleMode::gt_sent_gt_tag_fusion) {
            auto bits = expand_mask_to_tokens(inst, masks[i].bits);
            sentence = generate(inst, bits, *fusion, vocab, config.beam_width,
                                config.max_len).tokens;
        } else {
            sentence = extract_highlighted(inst, masks[i]);
        }
        out.sentences.push_back(std::move(sentence));
        ProvenanceEntry prov;
        prov.sent_idx = inst.sent_idx;
        prov.p_sent = align_scores[i];
        prov.mask = masks[i].bits;
        prov.strategy = tag;
        out.provenance.push_back(std::move(prov));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

EvalResult evaluate(const std::vector<Document>& docs,
                    const std::vector<SummaryOutput>& outputs) {
    std::unordered_map<std::string, const Document*> by_id;
    for (const auto& doc : docs) by_id[doc.id] = &doc;

    std::vector<std::string> unmatched;
    std::unordered_set<std::string> seen;
    for (const auto& out : outputs) {
        if (!by_id.count(out.doc_id)) unmatched.push_back("output:" + out.doc_id);
        seen.insert(out.doc_id);
    }
    for (const auto& doc : docs)
        if (!seen.count(doc.id)) unmatched.push_back("document:" + doc.id);
    if (!unmatched.empty()) {
        std::string msg = "evaluate: unmatched ids:";
        for (const auto& id : unmatched) msg += " " + id;
        throw DataError(msg);
    }

    EvalResult result;
    result.documents = static_cast<long>(outputs.size());
    for (const char* metric : {"rouge1", "rouge2", "rougeL"}) result.mean[metric] = {};
    for (const auto& out : outputs) {
        const Document& doc = *by_id[out.doc_id];
        if (doc.summary.empty())
            throw DataError("evaluate: document has no references: " + doc.id);
        auto scores = rouge_summary(out.sentences, doc.summary);
        for (auto& [metric, score] : scores) {
            result.mean[metric].recall += score.recall;
            result.mean[metric].precision += score.precision;
            result.mean[metric].f1 += score.f1;
        }
    }
    if (result.documents > 0) {
        for (auto& [metric, score] : result.mean) {
            score.recall /= static_cast<double>(result.documents);
            score.precision /= static_cast<double>(result.documents);
            score.f1 /= static_cast<double>(result.documents);
        }
    }
    return result;
}

std::string render_eval_table(const EvalResult& result) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "metric    recall  precision      f1\n";
    static const std::pair<const char*, const char*> rows[] = {
        {"rouge1", "R-1"}, {"rouge2", "R-2"}, {"rougeL", "R-L"}};
    for (const auto& [key, label] : rows) {
        const auto& s = result.mean.at(key);
        os << std::left << std::setw(9) << label << std::right << std::setw(7)
           << s.recall * 100.0 << std::setw(11) << s.precision * 100.0 << std::setw(8)
           << s.f1 * 100.0 << "\n";
    }
    os << "(" << result.documents << " documents)\n";
    return os.str();
}

void write_eval_csv(const std::string& path, const EvalResult& result) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open eval csv for writing: " + path);
    os << "metric,recall,precision,f1\n";
    os << std::setprecision(17);
    for (const char* metric : {"rouge1", "rouge2", "rougeL"}) {
        const auto& s = result.mean.at(metric);
        os << metric << "," << s.recall << "," << s.precision << "," << s.f1 << "\n";
    }
}

// ---------------------------------------------------------------------------
// Sweep

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(to_double("grid", item));
    }
    if (out.empty()) throw ConfigError("sweep: empty grid");
    return out;
}

std::vector<StrategyKind> parse_strategies(const std::string& csv) {
    std::vector<StrategyKind> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(strategy_from_name(item));
    }
    if (out.empty()) throw ConfigError("sweep: no strategies");
    return out;
}

std::vector<SweepRow> sweep_thresholds(const std::vector<Document>& docs,
                                       const SelectorModel& selector, const FusionModel& fusion,
                                       const Vocab& vocab, const std::vector<double>& grid,
                                       const std::vector<StrategyKind>& strategies,
                                       const RunConfig& config) {
    detail::check(!grid.empty(), "sweep: empty grid");

    // rank and tag once per document; the grid only changes masks
    struct DocState {
        const Document* doc;
        std::vector<RankedInstance> ranked;
        std::vector<std::vector<double>> prob_groups;
    };
    std::vector<DocState> states;
    for (const auto& doc : docs) {
        DocState st;
        st.doc = &doc;
        st.ranked = rank_instances(doc, selector, vocab, config.k, config.rank_options());
        for (const auto& entry : st.ranked)
            st.prob_groups.push_back(score_instance(entry.instance, selector, vocab).token_probs);
        states.push_back(std::move(st));
    }

    std::vector<SweepRow> rows;
    for (StrategyKind strategy : strategies) {
        for (double param : grid) {
            RunConfig point = config;
            point.strategy = strategy;
            point.strategy_param = param;

            std::vector<SummaryOutput> outputs;
            std::vector<HighlightMask> all_masks;
            for (const auto& st : states) {
                auto masks = masks_for(st.prob_groups, point);
                all_masks.insert(all_masks.end(), masks.begin(), masks.end());
                SummaryOutput out;
                out.doc_id = st.doc->id;
                for (std::size_t i = 0; i < st.ranked.size(); ++i) {
                    auto mask = masks[i];
                    apply_fallback(mask, st.prob_groups[i], st.doc->id);
                    auto bits = expand_mask_to_tokens(st.ranked[i].instance, mask.bits);
                    out.sentences.push_back(generate(st.ranked[i].instance, bits, fusion, vocab,
                                                     point.beam_width, point.max_len).tokens);
                    ProvenanceEntry prov;
                    prov.sent_idx = st.ranked[i].instance.sent_idx;
                    prov.p_sent = st.ranked[i].p_sent;
                    prov.mask = mask.bits;
                    prov.strategy = strategy_name(strategy);
                    out.provenance.push_back(std::move(prov));
                }
                outputs.push_back(std::move(out));
            }
            auto eval = evaluate(docs, outputs);
            SweepRow row;
            row.strategy = strategy == StrategyKind::threshold ? "threshold" : "proportional";
            row.scope = strategy == StrategyKind::prop_document ? "document" : "instance";
            row.param = param;
            row.rate = all_masks.empty() ? 0.0 : highlight_rate(all_masks);
            row.r1 = eval.mean.at("rouge1");
            row.r2 = eval.mean.at("rouge2");
            row.rl = eval.mean.at("rougeL");
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open sweep csv for writing: " + path);
    os << "strategy,scope,param,highlight_rate,r1,r2,rl\n";
    os << std::setprecision(17);
    for (const auto& row : rows) {
        os << row.strategy << "," << row.scope << "," << row.param << "," << row.rate << ","
           << row.r1.f1 << "," << row.r2.f1 << "," << row.rl.f1 << "\n";
    }
}

}  // namespace casumm
