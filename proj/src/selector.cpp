#include "casumm/selector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include "casumm/checkpoint.hpp"
#include "casumm/errors.hpp"

namespace casumm {

using nn::Graph;
using nn::Tensor;

namespace {

constexpr double kMaskBias = -1e30;

std::string layer_key(int layer, const char* name) {
    return "l" + std::to_string(layer) + "." + name;
}

}  // namespace

SelectorModel::SelectorModel(SelectorConfig config, unsigned seed) : config_(config) {
    detail::check(config_.vocab_size > 0, "selector: vocab_size must be set");
    detail::check(config_.d_model % config_.heads == 0,
                  "selector: d_model must be divisible by heads");
    Rng rng(seed);
    int d = config_.d_model;
    double s = 1.0 / std::sqrt(static_cast<double>(d));
    params_.add_uniform("tok_emb", {config_.vocab_size, d}, s, rng);
    params_.add_uniform("pos_emb", {config_.max_len, d}, s, rng);
    params_.add_uniform("seg_emb", {2, d}, s, rng);
    for (int l = 0; l < config_.layers; ++l) {
        for (const char* name : {"wq", "wk", "wv", "wo"})
            params_.add_uniform(layer_key(l, name), {d, d}, s, rng);
        for (const char* name : {"bq", "bk", "bv", "bo"})
            params_.add(layer_key(l, name), {1, d});
        params_.add(layer_key(l, "ln1_g"), {1, d}).value.fill(1.0);
        params_.add(layer_key(l, "ln1_b"), {1, d});
        params_.add_uniform(layer_key(l, "ff_w1"), {d, config_.d_ff}, s, rng);
        params_.add(layer_key(l, "ff_b1"), {1, config_.d_ff});
        params_.add_uniform(layer_key(l, "ff_w2"), {config_.d_ff, d},
                            1.0 / std::sqrt(static_cast<double>(config_.d_ff)), rng);
        params_.add(layer_key(l, "ff_b2"), {1, d});
        params_.add(layer_key(l, "ln2_g"), {1, d}).value.fill(1.0);
        params_.add(layer_key(l, "ln2_b"), {1, d});
    }
    params_.add_uniform("u", {d, 1}, s, rng);
    params_.add_uniform("v", {d, 1}, s, rng);

    auto& meta = params_.add("config", {6});
    meta.trainable = false;
    meta.value.v = {static_cast<double>(config_.vocab_size), static_cast<double>(config_.layers),
                    static_cast<double>(config_.heads), static_cast<double>(config_.d_model),
                    static_cast<double>(config_.d_ff), static_cast<double>(config_.max_len)};
}

void SelectorModel::save(const std::string& path) const {
    nn::save_checkpoint(path, params_);
}

SelectorModel SelectorModel::load(const std::string& path) {
    auto entries = nn::read_checkpoint(path);
    const Tensor* meta = nullptr;
    for (const auto& [name, tensor] : entries)
        if (name == "config") meta = &tensor;
    if (!meta || meta->numel() != 6)
        throw DataError("selector checkpoint lacks a config entry: " + path);
    SelectorConfig config;
    config.vocab_size = static_cast<int>(meta->v[0]);
    config.layers = static_cast<int>(meta->v[1]);
    config.heads = static_cast<int>(meta->v[2]);
    config.d_model = static_cast<int>(meta->v[3]);
    config.d_ff = static_cast<int>(meta->v[4]);
    config.max_len = static_cast<int>(meta->v[5]);
    SelectorModel model(config, 0);
    nn::load_checkpoint(path, model.params_);
    return model;
}

SelectorInput assemble_selector_input(const Instance& instance, const Vocab& vocab) {
    // [CLS] sent1 [SEP] (sent2 [SEP]); segment flips to 1 after the first [SEP]
    SelectorInput input;
    input.ids = {Vocab::kCls};
    input.segments = {0};
    int segment = 0;
    for (const auto& tok : instance.tokens) {
        if (tok == kSepToken) {
            input.ids.push_back(Vocab::kSep);
            input.segments.push_back(segment);
            segment = 1;
        } else {
            input.real_positions.push_back(static_cast<int>(input.ids.size()));
            input.ids.push_back(vocab.id(tok));
            input.segments.push_back(segment);
        }
    }
    input.ids.push_back(Vocab::kSep);
    input.segments.push_back(segment);
    return input;
}

EncoderStates encode(Graph& g, const Instance& instance, const SelectorModel& model,
                     const Vocab& vocab, int pad_to) {
    const auto& config = model.config();
    auto& params = model.params();

    SelectorInput input = assemble_selector_input(instance, vocab);
    std::vector<int>& ids = input.ids;
    std::vector<int>& segs = input.segments;
    std::vector<int>& real_positions = input.real_positions;

    int seq_len = static_cast<int>(ids.size());
    if (seq_len > config.max_len)
        throw DataError("instance too long for the selector: " + std::to_string(seq_len) +
                        " tokens vs max_len " + std::to_string(config.max_len) +
                        " (doc " + instance.doc_id + ")");
    int total = std::max(seq_len, pad_to);
    if (total > config.max_len)
        throw DataError("pad_to exceeds selector max_len");
    for (int i = seq_len; i < total; ++i) {
        ids.push_back(Vocab::kPad);
        segs.push_back(0);
    }

    std::vector<int> positions(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);

    auto x = g.add(g.add(g.rows(g.param(*params.find("tok_emb")), ids),
                         g.rows(g.param(*params.find("pos_emb")), positions)),
                   g.rows(g.param(*params.find("seg_emb")), segs));

    Graph::Id mask_bias = -1;
    if (total > seq_len) {
        Tensor bias = Tensor::zeros({total, total});
        for (int i = 0; i < total; ++i)
            for (int j = seq_len; j < total; ++j) bias.at2(i, j) = kMaskBias;
        mask_bias = g.input(std::move(bias));
    }

    int d = config.d_model;
    int dh = d / config.heads;
    double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int l = 0; l < config.layers; ++l) {
        auto proj = [&](const char* w, const char* b) {
            return g.add(g.matmul(x, g.param(*params.find(layer_key(l, w)))),
                         g.param(*params.find(layer_key(l, b))));
        };
        auto q = proj("wq", "bq");
        auto k = proj("wk", "bk");
        auto v = proj("wv", "bv");
        std::vector<Graph::Id> heads;
        for (int h = 0; h < config.heads; ++h) {
            auto qh = g.slice(q, 1, h * dh, dh);
            auto kh = g.slice(k, 1, h * dh, dh);
            auto vh = g.slice(v, 1, h * dh, dh);
            auto scores = g.scale(g.matmul(qh, g.transpose(kh)), att_scale);
            if (mask_bias >= 0) scores = g.add(scores, mask_bias);
            heads.push_back(g.matmul(g.softmax(scores, 1), vh));
        }
        auto attn = g.add(g.matmul(g.concat(heads, 1), g.param(*params.find(layer_key(l, "wo")))),
                          g.param(*params.find(layer_key(l, "bo"))));
        x = g.layer_norm(g.add(x, attn), g.param(*params.find(layer_key(l, "ln1_g"))),
                         g.param(*params.find(layer_key(l, "ln1_b"))));
        auto hidden = g.tanh_(g.add(g.matmul(x, g.param(*params.find(layer_key(l, "ff_w1")))),
                                    g.param(*params.find(layer_key(l, "ff_b1")))));
        auto ff = g.add(g.matmul(hidden, g.param(*params.find(layer_key(l, "ff_w2")))),
                        g.param(*params.find(layer_key(l, "ff_b2"))));
        x = g.layer_norm(g.add(x, ff), g.param(*params.find(layer_key(l, "ln2_g"))),
                         g.param(*params.find(layer_key(l, "ln2_b"))));
    }

    EncoderStates states;
    states.states = x;
    states.cls_state = g.slice(x, 0, 0, 1);
    states.real_positions = std::move(real_positions);
    states.seq_len = seq_len;
    return states;
}

Graph::Id score_instance_node(Graph& g, const EncoderStates& states, const SelectorModel& model) {
    auto& params = model.params();
    return g.sigmoid_(g.matmul(states.cls_state, g.param(*params.find("u"))));
}

Graph::Id score_tokens_node(Graph& g, const EncoderStates& states, const SelectorModel& model) {
    auto& params = model.params();
    auto token_states = g.rows(states.states, states.real_positions);
    return g.sigmoid_(g.matmul(token_states, g.param(*params.find("v"))));
}

InstanceScore score_instance(const Instance& instance, const SelectorModel& model,
                             const Vocab& vocab) {
    Graph g;
    auto states = encode(g, instance, model, vocab);
    auto p_sent = score_instance_node(g, states, model);
    auto token_probs = score_tokens_node(g, states, model);
    InstanceScore score;
    score.p_sent = g.scalar_value(p_sent);
    score.token_probs = g.value(token_probs).v;
    return score;
}

Graph::Id selector_loss_node(Graph& g, Graph::Id p_sent, Graph::Id token_probs,
                             const Instance& instance, double lambda, LossMode mode) {
    detail::check(lambda >= 0.0 && lambda <= 1.0, "selector loss: lambda must be in [0,1]");
    auto label = g.input(Tensor::row({static_cast<double>(instance.label)}));
    auto sent_loss = g.mean(g.bce(p_sent, label));

    double sent_weight = mode == LossMode::convex ? 1.0 - lambda : 1.0;
    bool use_token_term = instance.label == 1 && lambda > 0.0;
    if (!use_token_term) return g.scale(sent_loss, sent_weight);

    auto real = real_token_positions(instance);
    detail::check(g.value(token_probs).numel() == static_cast<int>(real.size()),
                  "selector loss: token probabilities not aligned to highlight labels");
    std::vector<double> labels;
    labels.reserve(real.size());
    for (int pos : real)
        labels.push_back(static_cast<double>(instance.highlights[static_cast<std::size_t>(pos)]));
    auto tag_labels = g.input(Tensor::column(std::move(labels)));
    auto tag_loss = g.mean(g.bce(token_probs, tag_labels));
    return g.add(g.scale(sent_loss, sent_weight), g.scale(tag_loss, lambda));
}

void truncate_instance(Instance& instance, int max_real_tokens) {
    auto real = real_token_positions(instance);
    if (static_cast<int>(real.size()) <= max_real_tokens) return;
    int cutoff = real[static_cast<std::size_t>(max_real_tokens)];
    std::cerr << "[warn] truncating instance of doc " << instance.doc_id << " from "
              << real.size() << " to " << max_real_tokens << " tokens\n";
    instance.tokens.resize(static_cast<std::size_t>(cutoff));
    instance.highlights.resize(static_cast<std::size_t>(cutoff));
    // drop a trailing separator left dangling by the cut
    while (!instance.tokens.empty() && instance.tokens.back() == kSepToken) {
        instance.tokens.pop_back();
        instance.highlights.pop_back();
    }
}

SelectorModel train_selector(const std::vector<Instance>& instances, const Vocab& vocab,
                             const SelectorConfig& config, const TrainConfig& train,
                             std::vector<EpochLog>* log) {
    if (instances.empty()) throw DataError("train_selector: no instances");
    bool has_positive = false;
    for (const auto& inst : instances) has_positive |= inst.label == 1;
    if (!has_positive) throw DataError("train_selector: no positive instances");

    std::vector<Instance> data = instances;
    for (auto& inst : data) truncate_instance(inst, config.max_len - 3);

    SelectorModel model(config, train.seed);
    nn::Adam optimizer(train.adam);
    Rng shuffle_rng(static_cast<std::uint64_t>(train.seed) * 0x9e3779b97f4a7c15ULL + 1);

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= train.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        long correct = 0;
        int in_batch = 0;
        for (std::size_t step = 0; step < order.size(); ++step) {
            const Instance& inst = data[order[step]];
            Graph g;
            auto states = encode(g, inst, model, vocab);
            auto p_sent = score_instance_node(g, states, model);
            auto token_probs = score_tokens_node(g, states, model);
            auto loss = selector_loss_node(g, p_sent, token_probs, inst, train.lambda,
                                           train.loss_mode);
            double loss_value = g.scalar_value(loss);
            if (!std::isfinite(loss_value))
                throw NumericError("train_selector: non-finite loss at epoch " +
                                   std::to_string(epoch) + " step " + std::to_string(step + 1));
            g.backward(loss);
            loss_sum += loss_value;
            correct += (g.scalar_value(p_sent) > 0.5) == (inst.label == 1) ? 1 : 0;
            if (++in_batch >= train.batch_size) {
                optimizer.step(model.params());
                in_batch = 0;
            }
        }
        if (in_batch > 0) optimizer.step(model.params());

        EpochLog entry;
        entry.epoch = epoch;
        entry.loss = loss_sum / static_cast<double>(data.size());
        entry.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
        if (log) log->push_back(entry);
        if (!train.quiet)
            std::cerr << "[selector] epoch " << epoch << " loss " << entry.loss << " acc "
                      << entry.accuracy << "\n";
        if (!train.checkpoint_path.empty()) {
            model.save(train.checkpoint_path);
            if (train.keep_epoch_checkpoints)
                model.save(train.checkpoint_path + ".epoch" + std::to_string(epoch));
        }
    }
    return model;
}

std::vector<RankedInstance> rank_instances(const Document& doc, const SelectorModel& model,
                                           const Vocab& vocab, int k, const RankOptions& opts) {
    detail::check(k >= 1, "rank_instances: k must be >= 1");
    detail::check(!doc.sentences.empty(), "rank_instances: document has no sentences");

    int n = static_cast<int>(doc.sentences.size());
    std::vector<std::vector<int>> candidates;
    for (int i = 0; i < n; ++i) candidates.push_back({i});
    int window = std::min(n, opts.pair_window);
    for (int i = 0; i < window; ++i)
        for (int j = i + 1; j < window; ++j) candidates.push_back({i, j});
    std::sort(candidates.begin(), candidates.end());

    std::vector<RankedInstance> scored;
    scored.reserve(candidates.size());
    for (const auto& idx : candidates) {
        RankedInstance entry;
        entry.instance.doc_id = doc.id;
        entry.instance.sent_idx = idx;
        entry.instance.tokens = candidate_tokens(doc, idx);
        entry.instance.highlights.assign(entry.instance.tokens.size(), 0);
        truncate_instance(entry.instance, model.config().max_len - 3);
        entry.p_sent = score_instance(entry.instance, model, vocab).p_sent;
        scored.push_back(std::move(entry));
    }
    // candidates are already in tie-break order; stable sort keeps it
    std::stable_sort(scored.begin(), scored.end(),
                     [](const RankedInstance& a, const RankedInstance& b) {
                         return a.p_sent > b.p_sent;
                     });

    std::vector<RankedInstance> selected;
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (auto& entry : scored) {
        if (static_cast<int>(selected.size()) >= k) break;
        if (opts.sentence_disjoint) {
            bool clash = false;
            for (int idx : entry.instance.sent_idx) clash |= used[static_cast<std::size_t>(idx)];
            if (clash) continue;
            for (int idx : entry.instance.sent_idx) used[static_cast<std::size_t>(idx)] = true;
        }
        selected.push_back(std::move(entry));
    }
    return selected;
}

}  // namespace casumm
