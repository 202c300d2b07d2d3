#pragma once

#include <map>
#include <string>
#include <vector>

#include "casumm/corpus.hpp"
#include "casumm/fusion.hpp"
#include "casumm/oracle.hpp"
#include "casumm/rouge.hpp"
#include "casumm/selector.hpp"
#include "casumm/strategy.hpp"
#include "casumm/train.hpp"

namespace casumm {

enum class OrderMode { rank, document };

enum class OracleMode { gt_sent_sys_tag, gt_sent_gt_tag, gt_sent_gt_tag_fusion };
OracleMode oracle_mode_from_name(const std::string& name);

// Flat key=value run configuration; unknown keys are rejected.
struct RunConfig {
    // paths
    std::string corpus;
    std::string instances;
    std::string vocab;
    std::string selector_ckpt;
    std::string fusion_ckpt;
    std::string output;
    std::string summaries;  // evaluate input
    std::string eval_csv;
    std::string train_log;

    // cascade
    int k = 4;
    StrategyKind strategy = StrategyKind::threshold;
    double strategy_param = 0.15;
    int beam_width = 4;
    int max_len = 40;
    OrderMode order = OrderMode::rank;
    bool disjoint = true;
    bool trace = false;

    // oracle construction
    int negative_ratio = 1;
    double pair_margin = 0.02;
    int pair_window = 30;
    int vocab_size = 20000;

    // training
    double lambda = 0.2;
    unsigned seed = 13;
    int epochs = 10;
    int batch_size = 1;
    double lr = 1e-3;
    LossMode loss_mode = LossMode::convex;
    bool epoch_checkpoints = false;

    // model hyperparameters
    int sel_layers = 2;
    int sel_heads = 4;
    int sel_dim = 128;
    int sel_ff = 512;
    int sel_max_len = 128;
    int fus_emb = 64;
    int fus_hidden = 64;
    bool coverage = false;

    // sweep
    std::string grid;        // comma-separated thresholds / rates
    std::string strategies;  // comma-separated strategy names

    OracleOptions oracle_options() const { return {pair_margin, pair_window}; }
    RankOptions rank_options() const { return {pair_window, disjoint}; }
    SelectorConfig selector_config(int vocab_count) const;
    FusionConfig fusion_config(int vocab_count) const;
    TrainConfig train_config(const std::string& checkpoint_path) const;
};

RunConfig load_run_config(const std::string& path);
// Applies one key=value; throws ConfigError for unknown keys or bad values.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

struct ProvenanceEntry {
    std::vector<int> sent_idx;
    double p_sent = 0.0;
    std::vector<int> mask;  // over the instance's real tokens
    std::string strategy;
};

struct SummaryOutput {
    std::string doc_id;
    std::vector<std::vector<std::string>> sentences;
    std::vector<ProvenanceEntry> provenance;
};

void save_summaries(const std::string& path, const std::vector<SummaryOutput>& outputs);
std::vector<SummaryOutput> load_summaries(const std::string& path);

// Full cascade: rank instances, tag tokens, mask by strategy, fuse each
// instance into one summary sentence. An all-zero mask falls back to the
// single highest-probability token.
SummaryOutput summarize(const Document& doc, const SelectorModel& selector,
                        const FusionModel& fusion, const Vocab& vocab, const RunConfig& config);

// Tagging-only output: each selected instance contributes its highlighted
// tokens in source order, no generation. All-zero masks yield an empty
// sentence (logged).
SummaryOutput extract_tag_summary(const Document& doc, const SelectorModel& selector,
                                  const Vocab& vocab, const RunConfig& config);

// Ground-truth-assisted variants: sentence selection comes from the oracle
// aligner; tags come from the selector (sys_tag) or the smoothed gold
// labels (gt_tag); gt_sent_gt_tag_fusion feeds gold tags through fusion.
SummaryOutput oracle_summarize(const Document& doc, OracleMode mode,
                               const SelectorModel* selector, const FusionModel* fusion,
                               const Vocab& vocab, const RunConfig& config);

struct EvalResult {
    std::map<std::string, RougeScore> mean;  // rouge1 / rouge2 / rougeL, averaged over docs
    long documents = 0;
};

// Mean per-document rouge_summary over outputs matched to docs by id;
// mismatched ids on either side raise DataError listing them.
EvalResult evaluate(const std::vector<Document>& docs,
                    const std::vector<SummaryOutput>& outputs);
std::string render_eval_table(const EvalResult& result);
void write_eval_csv(const std::string& path, const EvalResult& result);

struct SweepRow {
    std::string strategy;  // threshold | proportional
    std::string scope;     // instance | document
    double param = 0.0;
    double rate = 0.0;  // measured highlight rate
    RougeScore r1, r2, rl;
};

std::vector<SweepRow> sweep_thresholds(const std::vector<Document>& docs,
                                       const SelectorModel& selector, const FusionModel& fusion,
                                       const Vocab& vocab, const std::vector<double>& grid,
                                       const std::vector<StrategyKind>& strategies,
                                       const RunConfig& config);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

std::vector<double> parse_grid(const std::string& csv);
std::vector<StrategyKind> parse_strategies(const std::string& csv);

}  // namespace casumm
