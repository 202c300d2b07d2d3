#pragma once

#include <string>
#include <vector>

#include "casumm/corpus.hpp"
#include "casumm/graph.hpp"
#include "casumm/oracle.hpp"
#include "casumm/train.hpp"

namespace casumm {

struct SelectorConfig {
    int vocab_size = 0;
    int layers = 2;
    int heads = 4;
    int d_model = 128;
    int d_ff = 512;
    int max_len = 128;
};

// Transformer encoder with an instance-scoring head (weight vector u over
// the CLS state) and a token-tagging head (weight vector v over each token
// state). Both heads are bias-free.
class SelectorModel {
public:
    SelectorModel(SelectorConfig config, unsigned seed);

    const SelectorConfig& config() const { return config_; }
    // gradient buffers inside the store are scratch space, so a logically
    // const model hands out a mutable store; values change only in training
    nn::ParameterStore& params() const { return params_; }

    void save(const std::string& path) const;
    static SelectorModel load(const std::string& path);

private:
    SelectorConfig config_;
    mutable nn::ParameterStore params_;
};

// Per-token final-layer states for one encoded instance.
struct EncoderStates {
    nn::Graph::Id states = -1;        // [seq_len, d_model]
    nn::Graph::Id cls_state = -1;     // [1, d_model]
    std::vector<int> real_positions;  // sequence positions of the instance's real tokens
    int seq_len = 0;
};

struct InstanceScore {
    double p_sent = 0.0;
    std::vector<double> token_probs;  // aligned to real_token_positions(instance)
};

// Assembled encoder input: [CLS] sent1 [SEP] (sent2 [SEP]), segment ids
// 0 through the first [SEP] and 1 afterwards.
struct SelectorInput {
    std::vector<int> ids;
    std::vector<int> segments;
    std::vector<int> real_positions;
};

SelectorInput assemble_selector_input(const Instance& instance, const Vocab& vocab);

// Assembles [CLS] sent1 [SEP] (sent2 [SEP]) with segment ids 0/1, runs the
// encoder stack. pad_to > seq_len appends attention-masked padding (the
// spec of the masking test; padding never changes real-token states).
// Throws DataError when the instance exceeds max_len.
EncoderStates encode(nn::Graph& g, const Instance& instance, const SelectorModel& model,
                     const Vocab& vocab, int pad_to = 0);

// p_sent = sigmoid(u . h_cls), as a graph node.
nn::Graph::Id score_instance_node(nn::Graph& g, const EncoderStates& states,
                                  const SelectorModel& model);

// p_highlight(w_i) = sigmoid(v . h_i) for real tokens only, [n_real, 1].
nn::Graph::Id score_tokens_node(nn::Graph& g, const EncoderStates& states,
                                const SelectorModel& model);

// Convenience wrapper evaluating both heads without keeping the graph.
InstanceScore score_instance(const Instance& instance, const SelectorModel& model,
                             const Vocab& vocab);

// (1-lambda)*BCE(p_sent,label) + lambda*mean-token-BCE on positives; the
// token term is dropped on negatives (and under additive mode the sentence
// term keeps weight 1).
nn::Graph::Id selector_loss_node(nn::Graph& g, nn::Graph::Id p_sent, nn::Graph::Id token_probs,
                                 const Instance& instance, double lambda,
                                 LossMode mode = LossMode::convex);

SelectorModel train_selector(const std::vector<Instance>& instances, const Vocab& vocab,
                             const SelectorConfig& config, const TrainConfig& train,
                             std::vector<EpochLog>* log = nullptr);

struct RankedInstance {
    Instance instance;
    double p_sent = 0.0;
};

struct RankOptions {
    int pair_window = 30;
    bool sentence_disjoint = true;
};

// Scores every candidate singleton/pair and returns the top k by p_sent,
// greedily skipping candidates that reuse an already-selected sentence.
// Ties break toward lower sentence indices. Candidates longer than the
// model's max_len are truncated with a warning.
std::vector<RankedInstance> rank_instances(const Document& doc, const SelectorModel& model,
                                           const Vocab& vocab, int k,
                                           const RankOptions& opts = {});

// Trims an instance (tokens + highlights) to at most max_real_tokens real
// tokens; logs to stderr when it truncates.
void truncate_instance(Instance& instance, int max_real_tokens);

}  // namespace casumm
