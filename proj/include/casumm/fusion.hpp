#pragma once

#include <optional>
#include <string>
#include <vector>

#include "casumm/corpus.hpp"
#include "casumm/graph.hpp"
#include "casumm/oracle.hpp"
#include "casumm/train.hpp"

namespace casumm {

struct FusionConfig {
    int vocab_size = 0;
    int d_emb = 64;
    int d_hid = 64;
    bool coverage = false;  // coverage feature + loss term, off by default
};

// Pointer-generator encoder-decoder: single-layer bidirectional LSTM
// encoder over token embeddings plus highlight-on/off embeddings, additive
// attention, single-layer LSTM decoder, and a generate/copy mixture
// weighted by p_gen over the extended vocabulary (vocab plus source OOVs).
class FusionModel {
public:
    FusionModel(FusionConfig config, unsigned seed);

    const FusionConfig& config() const { return config_; }
    nn::ParameterStore& params() const { return params_; }

    void save(const std::string& path) const;
    static FusionModel load(const std::string& path);

private:
    FusionConfig config_;
    mutable nn::ParameterStore params_;
};

// Encoder outputs plus the source's extended-vocabulary bookkeeping.
struct EncodedSource {
    nn::Graph::Id states = -1;       // [n, 2*d_hid]
    nn::Graph::Id att_proj = -1;     // [n, d_hid], cached attention features
    nn::Graph::Id init_hidden = -1;  // [1, d_hid] reduced decoder start state
    nn::Graph::Id init_cell = -1;    // [1, d_hid]
    std::vector<std::string> tokens;
    std::vector<int> vocab_ids;   // UNK where out of vocabulary
    std::vector<int> ext_ids;     // vocab id or vocab_size + oov index
    std::vector<std::string> oov_tokens;  // order of first occurrence
    int length = 0;

    int extended_size(int vocab_size) const {
        return vocab_size + static_cast<int>(oov_tokens.size());
    }
};

// One decoding step's outputs. attention sums to 1 over source positions;
// final_dist sums to 1 over the extended vocabulary.
struct DecodeState {
    nn::Graph::Id hidden = -1;      // [1, d_hid]
    nn::Graph::Id cell = -1;        // [1, d_hid]
    nn::Graph::Id attention = -1;   // [1, n], valid after the first step
    nn::Graph::Id p_gen = -1;       // [1, 1], valid after the first step
    nn::Graph::Id final_dist = -1;  // [1, extended], valid after the first step
    nn::Graph::Id coverage = -1;    // [n, 1] running attention sum (coverage mode)
    int step = 0;
};

struct DecodeOptions {
    std::optional<double> force_p_gen;  // clamp the generate/copy mixture
};

// e_i = token_embedding + (bit ? on : off); highlight_bits aligns to tokens
// (the <sep> marker carries bit 0). Length mismatch throws.
nn::Graph::Id embed_with_highlights(nn::Graph& g, const std::vector<std::string>& tokens,
                                    const std::vector<int>& highlight_bits,
                                    const FusionModel& model, const Vocab& vocab);

EncodedSource encode_source(nn::Graph& g, const std::vector<std::string>& tokens,
                            const std::vector<int>& highlight_bits, const FusionModel& model,
                            const Vocab& vocab);

// Decoder state before the first token (BOS goes into the first decode_step).
DecodeState init_decode(nn::Graph& g, const EncodedSource& src, const FusionModel& model);

DecodeState decode_step(nn::Graph& g, const DecodeState& state, int prev_vocab_id,
                        const EncodedSource& src, const FusionModel& model,
                        const DecodeOptions& opts = {});

// Teacher-forced mean NLL of instance.target (plus EOS) under the given
// highlight bits. Coverage adds its penalty when the model enables it.
nn::Graph::Id fusion_loss_node(nn::Graph& g, const Instance& instance,
                               const std::vector<int>& highlight_bits, const FusionModel& model,
                               const Vocab& vocab, const DecodeOptions& opts = {});

double fusion_loss(const Instance& instance, const std::vector<int>& highlight_bits,
                   const FusionModel& model, const Vocab& vocab);

// Trains on positive instances with their smoothed gold labels as the
// highlight mask. Negative or target-less instances are rejected.
FusionModel train_fusion(const std::vector<Instance>& instances, const Vocab& vocab,
                         const FusionConfig& config, const TrainConfig& train,
                         std::vector<EpochLog>* log = nullptr);

struct GeneratedToken {
    std::string token;
    bool copied = false;  // copy mass exceeded generation mass
    int source_position = -1;  // argmax attention among the copied token's positions
    double p_gen = 0.0;
};

struct GenerationResult {
    std::vector<std::string> tokens;
    std::vector<GeneratedToken> provenance;
    double score = 0.0;  // length-normalized log probability
};

// Beam search with score/length normalization; stops at EOS or max_len.
// beam_width 1 is greedy decoding.
GenerationResult generate(const Instance& instance, const std::vector<int>& highlight_bits,
                          const FusionModel& model, const Vocab& vocab, int beam_width,
                          int max_len, const DecodeOptions& opts = {});

// Expands a real-token mask to the full token list (0 at <sep> markers).
std::vector<int> expand_mask_to_tokens(const Instance& instance,
                                       const std::vector<int>& real_token_bits);

}  // namespace casumm
