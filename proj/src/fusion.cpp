#include "casumm/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "casumm/checkpoint.hpp"
#include "casumm/errors.hpp"

namespace casumm {

using nn::Graph;
using nn::Tensor;

namespace {

struct LstmOut {
    Graph::Id h;
    Graph::Id c;
};

LstmOut lstm_step(Graph& g, Graph::Id x, Graph::Id h, Graph::Id c, nn::Parameter& w,
                  nn::Parameter& b, int d_hid) {
    auto z = g.concat({x, h}, 1);
    auto gates = g.add(g.matmul(z, g.param(w)), g.param(b));
    auto in_gate = g.sigmoid_(g.slice(gates, 1, 0, d_hid));
    auto forget_gate = g.sigmoid_(g.slice(gates, 1, d_hid, d_hid));
    auto out_gate = g.sigmoid_(g.slice(gates, 1, 2 * d_hid, d_hid));
    auto update = g.tanh_(g.slice(gates, 1, 3 * d_hid, d_hid));
    LstmOut out;
    out.c = g.add(g.mul(forget_gate, c), g.mul(in_gate, update));
    out.h = g.mul(out_gate, g.tanh_(out.c));
    return out;
}

int extended_target_id(const std::string& token, const Vocab& vocab,
                       const EncodedSource& src) {
    int vid = vocab.id(token);
    if (vid != Vocab::kUnk) return vid;
    for (std::size_t i = 0; i < src.oov_tokens.size(); ++i)
        if (src.oov_tokens[i] == token) return vocab.size() + static_cast<int>(i);
    return Vocab::kUnk;
}

}  // namespace

FusionModel::FusionModel(FusionConfig config, unsigned seed) : config_(config) {
    detail::check(config_.vocab_size > 0, "fusion: vocab_size must be set");
    Rng rng(seed);
    int de = config_.d_emb;
    int dh = config_.d_hid;
    double se = 1.0 / std::sqrt(static_cast<double>(de));
    double sh = 1.0 / std::sqrt(static_cast<double>(dh));
    double sz = 1.0 / std::sqrt(static_cast<double>(de + dh));

    params_.add_uniform("emb", {config_.vocab_size, de}, se, rng);
    params_.add_uniform("hl_on", {1, de}, se, rng);
    params_.add_uniform("hl_off", {1, de}, se, rng);
    for (const char* dir : {"enc_fw", "enc_bw"}) {
        params_.add_uniform(std::string(dir) + "_w", {de + dh, 4 * dh}, sz, rng);
        params_.add(std::string(dir) + "_b", {1, 4 * dh});
    }
    params_.add_uniform("red_h_w", {2 * dh, dh}, 1.0 / std::sqrt(2.0 * dh), rng);
    params_.add("red_h_b", {1, dh});
    params_.add_uniform("red_c_w", {2 * dh, dh}, 1.0 / std::sqrt(2.0 * dh), rng);
    params_.add("red_c_b", {1, dh});
    params_.add_uniform("dec_w", {de + dh, 4 * dh}, sz, rng);
    params_.add("dec_b", {1, 4 * dh});
    params_.add_uniform("att_enc_w", {2 * dh, dh}, 1.0 / std::sqrt(2.0 * dh), rng);
    params_.add_uniform("att_dec_w", {dh, dh}, sh, rng);
    params_.add("att_b", {1, dh});
    params_.add_uniform("att_v", {dh, 1}, sh, rng);
    if (config_.coverage) params_.add_uniform("att_cov_w", {1, dh}, 0.1, rng);
    params_.add_uniform("pg_ctx_w", {2 * dh, 1}, 1.0 / std::sqrt(2.0 * dh), rng);
    params_.add_uniform("pg_dec_w", {dh, 1}, sh, rng);
    params_.add_uniform("pg_x_w", {de, 1}, se, rng);
    params_.add("pg_b", {1, 1});
    params_.add_uniform("out_w1", {3 * dh, dh}, 1.0 / std::sqrt(3.0 * dh), rng);
    params_.add("out_b1", {1, dh});
    params_.add_uniform("out_w2", {dh, config_.vocab_size}, sh, rng);
    params_.add("out_b2", {1, config_.vocab_size});

    auto& meta = params_.add("config", {4});
    meta.trainable = false;
    meta.value.v = {static_cast<double>(config_.vocab_size), static_cast<double>(de),
                    static_cast<double>(dh), config_.coverage ? 1.0 : 0.0};
}

void FusionModel::save(const std::string& path) const { nn::save_checkpoint(path, params_); }

FusionModel FusionModel::load(const std::string& path) {
    auto entries = nn::read_checkpoint(path);
    const Tensor* meta = nullptr;
    for (const auto& [name, tensor] : entries)
        if (name == "config") meta = &tensor;
    if (!meta || meta->numel() != 4)
        throw DataError("fusion checkpoint lacks a config entry: " + path);
    FusionConfig config;
    config.vocab_size = static_cast<int>(meta->v[0]);
    config.d_emb = static_cast<int>(meta->v[1]);
    config.d_hid = static_cast<int>(meta->v[2]);
    config.coverage = meta->v[3] != 0.0;
    FusionModel model(config, 0);
    nn::load_checkpoint(path, model.params_);
    return model;
}

Graph::Id embed_with_highlights(Graph& g, const std::vector<std::string>& tokens,
                                const std::vector<int>& highlight_bits, const FusionModel& model,
                                const Vocab& vocab) {
    if (tokens.size() != highlight_bits.size())
        throw DataError("embed_with_highlights: mask length " +
                        std::to_string(highlight_bits.size()) + " does not match token count " +
                        std::to_string(tokens.size()));
    detail::check(!tokens.empty(), "embed_with_highlights: empty token list");
    auto& params = model.params();
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(vocab.id(t));
    auto tok_emb = g.rows(g.param(*params.find("emb")), ids);

    auto on = g.param(*params.find("hl_on"));
    auto off = g.param(*params.find("hl_off"));
    std::vector<Graph::Id> hl_rows;
    hl_rows.reserve(tokens.size());
    for (int bit : highlight_bits) hl_rows.push_back(bit ? on : off);
    auto hl = g.concat(hl_rows, 0);
    return g.add(tok_emb, hl);
}

EncodedSource encode_source(Graph& g, const std::vector<std::string>& tokens,
                            const std::vector<int>& highlight_bits, const FusionModel& model,
                            const Vocab& vocab) {
    auto& params = model.params();
    int dh = model.config().d_hid;
    auto embs = embed_with_highlights(g, tokens, highlight_bits, model, vocab);
    int n = static_cast<int>(tokens.size());

    auto zero_state = g.input(Tensor::zeros({1, dh}));
    std::vector<Graph::Id> fwd(static_cast<std::size_t>(n)), bwd(static_cast<std::size_t>(n));
    Graph::Id h = zero_state, c = zero_state;
    for (int i = 0; i < n; ++i) {
        auto step = lstm_step(g, g.slice(embs, 0, i, 1), h, c, *params.find("enc_fw_w"),
                              *params.find("enc_fw_b"), dh);
        h = step.h;
        c = step.c;
        fwd[static_cast<std::size_t>(i)] = h;
    }
    Graph::Id fwd_final_h = h, fwd_final_c = c;
    h = zero_state;
    c = zero_state;
    for (int i = n - 1; i >= 0; --i) {
        auto step = lstm_step(g, g.slice(embs, 0, i, 1), h, c, *params.find("enc_bw_w"),
                              *params.find("enc_bw_b"), dh);
        h = step.h;
        c = step.c;
        bwd[static_cast<std::size_t>(i)] = h;
    }
    Graph::Id bwd_final_h = h, bwd_final_c = c;

    std::vector<Graph::Id> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        rows.push_back(g.concat({fwd[static_cast<std::size_t>(i)],
                                 bwd[static_cast<std::size_t>(i)]}, 1));

    EncodedSource src;
    src.states = g.concat(rows, 0);
    src.att_proj = g.matmul(src.states, g.param(*params.find("att_enc_w")));
    src.tokens = tokens;
    src.length = n;
    for (const auto& t : tokens) {
        int vid = vocab.id(t);
        src.vocab_ids.push_back(vid);
        if (vid == Vocab::kUnk) {
            int oov_idx = -1;
            for (std::size_t i = 0; i < src.oov_tokens.size(); ++i)
                if (src.oov_tokens[i] == t) oov_idx = static_cast<int>(i);
            if (oov_idx < 0) {
                oov_idx = static_cast<int>(src.oov_tokens.size());
                src.oov_tokens.push_back(t);
            }
            src.ext_ids.push_back(vocab.size() + oov_idx);
        } else {
            src.ext_ids.push_back(vid);
        }
    }

    // stash the reduced initial decoder state inside the source so
    // init_decode can reuse it
    auto hcat = g.concat({fwd_final_h, bwd_final_h}, 1);
    auto ccat = g.concat({fwd_final_c, bwd_final_c}, 1);
    src.init_hidden = g.tanh_(g.add(g.matmul(hcat, g.param(*params.find("red_h_w"))),
                                    g.param(*params.find("red_h_b"))));
    src.init_cell = g.tanh_(g.add(g.matmul(ccat, g.param(*params.find("red_c_w"))),
                                  g.param(*params.find("red_c_b"))));
    return src;
}

DecodeState init_decode(Graph& g, const EncodedSource& src, const FusionModel& model) {
    DecodeState state;
    state.hidden = src.init_hidden;
    state.cell = src.init_cell;
    if (model.config().coverage)
        state.coverage = g.input(Tensor::zeros({src.length, 1}));
    state.step = 0;
    return state;
}

DecodeState decode_step(Graph& g, const DecodeState& state, int prev_vocab_id,
                        const EncodedSource& src, const FusionModel& model,
                        const DecodeOptions& opts) {
    auto& params = model.params();
    const auto& config = model.config();
    int dh = config.d_hid;
    detail::check(prev_vocab_id >= 0 && prev_vocab_id < config.vocab_size,
                  "decode_step: prev token id out of vocabulary range");

    auto x = g.rows(g.param(*params.find("emb")), {prev_vocab_id});
    auto stepped = lstm_step(g, x, state.hidden, state.cell, *params.find("dec_w"),
                             *params.find("dec_b"), dh);

    // additive attention over source states
    auto dec_feat = g.matmul(stepped.h, g.param(*params.find("att_dec_w")));
    auto feat = g.add(src.att_proj, dec_feat);
    if (config.coverage)
        feat = g.add(feat, g.matmul(state.coverage, g.param(*params.find("att_cov_w"))));
    feat = g.add(feat, g.param(*params.find("att_b")));
    auto scores = g.transpose(g.matmul(g.tanh_(feat), g.param(*params.find("att_v"))));
    auto attention = g.softmax(scores, 1);  // [1, n]
    auto context = g.matmul(attention, src.states);

    auto hidden = g.add(g.matmul(g.concat({stepped.h, context}, 1),
                                 g.param(*params.find("out_w1"))),
                        g.param(*params.find("out_b1")));
    auto vocab_dist = g.softmax(g.add(g.matmul(hidden, g.param(*params.find("out_w2"))),
                                      g.param(*params.find("out_b2"))), 1);

    Graph::Id p_gen;
    if (opts.force_p_gen.has_value()) {
        p_gen = g.input(Tensor::row({*opts.force_p_gen}));
    } else {
        auto logits = g.add(g.add(g.matmul(context, g.param(*params.find("pg_ctx_w"))),
                                  g.matmul(stepped.h, g.param(*params.find("pg_dec_w")))),
                            g.add(g.matmul(x, g.param(*params.find("pg_x_w"))),
                                  g.param(*params.find("pg_b"))));
        p_gen = g.sigmoid_(logits);
    }
    auto copy_weight = g.sub(g.input(Tensor::row({1.0})), p_gen);

    int extended = src.extended_size(config.vocab_size);
    auto gen_part = g.mul(vocab_dist, p_gen);
    if (extended > config.vocab_size) {
        auto zeros = g.input(Tensor::zeros({1, extended - config.vocab_size}));
        gen_part = g.concat({gen_part, zeros}, 1);
    }
    auto copy_part = g.mul(g.scatter_sum(attention, src.ext_ids, extended), copy_weight);

    DecodeState next;
    next.hidden = stepped.h;
    next.cell = stepped.c;
    next.attention = attention;
    next.p_gen = p_gen;
    next.final_dist = g.add(gen_part, copy_part);
    if (config.coverage) next.coverage = g.add(state.coverage, g.transpose(attention));
    next.step = state.step + 1;
    return next;
}

nn::Graph::Id fusion_loss_node(Graph& g, const Instance& instance,
                               const std::vector<int>& highlight_bits, const FusionModel& model,
                               const Vocab& vocab, const DecodeOptions& opts) {
    if (instance.target.empty())
        throw DataError("fusion loss: instance has an empty target (doc " + instance.doc_id +
                        ")");
    auto src = encode_source(g, instance.tokens, highlight_bits, model, vocab);
    auto state = init_decode(g, src, model);

    Graph::Id total = -1;
    int prev = Vocab::kBos;
    for (std::size_t t = 0; t <= instance.target.size(); ++t) {
        Graph::Id prev_coverage = state.coverage;
        state = decode_step(g, state, prev, src, model, opts);
        int gold_ext = t < instance.target.size()
                           ? extended_target_id(instance.target[t], vocab, src)
                           : Vocab::kEos;
        auto step_loss = g.nll(state.final_dist, gold_ext);
        if (model.config().coverage) {
            // penalize attention that revisits already-covered positions
            auto covloss = g.sum(g.minimum(g.transpose(state.attention), prev_coverage));
            step_loss = g.add(step_loss, covloss);
        }
        total = total < 0 ? step_loss : g.add(total, step_loss);
        if (t < instance.target.size())
            prev = vocab.id(instance.target[t]);  // OOV targets feed back as UNK
    }
    // mean over the target length (incl. EOS)
    return g.scale(total, 1.0 / static_cast<double>(instance.target.size() + 1));
}

double fusion_loss(const Instance& instance, const std::vector<int>& highlight_bits,
                   const FusionModel& model, const Vocab& vocab) {
    Graph g;
    return g.scalar_value(fusion_loss_node(g, instance, highlight_bits, model, vocab));
}

FusionModel train_fusion(const std::vector<Instance>& instances, const Vocab& vocab,
                         const FusionConfig& config, const TrainConfig& train,
                         std::vector<EpochLog>* log) {
    if (instances.empty()) throw DataError("train_fusion: no instances");
    for (const auto& inst : instances) {
        if (inst.label != 1 || inst.target.empty())
            throw DataError("train_fusion: negative or target-less instance for doc " +
                            inst.doc_id);
    }

    FusionModel model(config, train.seed);
    nn::Adam optimizer(train.adam);
    Rng shuffle_rng(static_cast<std::uint64_t>(train.seed) * 0x9e3779b97f4a7c15ULL + 2);

    std::vector<std::size_t> order(instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= train.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        int in_batch = 0;
        for (std::size_t step = 0; step < order.size(); ++step) {
            const Instance& inst = instances[order[step]];
            Graph g;
            auto loss = fusion_loss_node(g, inst, inst.highlights, model, vocab);
            double loss_value = g.scalar_value(loss);
            if (!std::isfinite(loss_value))
                throw NumericError("train_fusion: non-finite loss at epoch " +
                                   std::to_string(epoch) + " step " + std::to_string(step + 1));
            g.backward(loss);
            loss_sum += loss_value;
            if (++in_batch >= train.batch_size) {
                optimizer.step(model.params());
                in_batch = 0;
            }
        }
        if (in_batch > 0) optimizer.step(model.params());

        EpochLog entry;
        entry.epoch = epoch;
        entry.loss = loss_sum / static_cast<double>(instances.size());
        if (log) log->push_back(entry);
        if (!train.quiet)
            std::cerr << "[fusion] epoch " << epoch << " loss " << entry.loss << "\n";
        if (!train.checkpoint_path.empty()) {
            model.save(train.checkpoint_path);
            if (train.keep_epoch_checkpoints)
                model.save(train.checkpoint_path + ".epoch" + std::to_string(epoch));
        }
    }
    return model;
}

GenerationResult generate(const Instance& instance, const std::vector<int>& highlight_bits,
                          const FusionModel& model, const Vocab& vocab, int beam_width,
                          int max_len, const DecodeOptions& opts) {
    detail::check(beam_width >= 1, "generate: beam_width must be >= 1");
    detail::check(max_len >= 1, "generate: max_len must be >= 1");

    Graph g;
    auto src = encode_source(g, instance.tokens, highlight_bits, model, vocab);

    struct Hypothesis {
        DecodeState state;
        int prev = Vocab::kBos;
        double logp = 0.0;
        std::vector<int> ext_tokens;
        std::vector<GeneratedToken> provenance;
    };
    auto normalized = [](double logp, std::size_t len) {
        return len == 0 ? -1e30 : logp / static_cast<double>(len);
    };

    std::vector<Hypothesis> active;
    Hypothesis root;
    root.state = init_decode(g, src, model);
    active.push_back(std::move(root));

    std::vector<Hypothesis> finished;
    for (int step = 0; step < max_len && !active.empty(); ++step) {
        struct Candidate {
            std::size_t hyp;
            int ext_id;
            double logp;
            DecodeState state;
            GeneratedToken prov;
        };
        std::vector<Candidate> pool;
        for (std::size_t hi = 0; hi < active.size(); ++hi) {
            auto next = decode_step(g, active[hi].state, active[hi].prev, src, model, opts);
            const auto& dist = g.value(next.final_dist).v;
            const auto& attn = g.value(next.attention).v;
            double p_gen_value = g.value(next.p_gen).v[0];

            // top beam_width extensions of this hypothesis
            std::vector<int> ids(dist.size());
            for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
            std::partial_sort(ids.begin(),
                              ids.begin() + std::min<std::size_t>(ids.size(),
                                                                  static_cast<std::size_t>(beam_width)),
                              ids.end(), [&](int a, int b) {
                                  if (dist[static_cast<std::size_t>(a)] !=
                                      dist[static_cast<std::size_t>(b)])
                                      return dist[static_cast<std::size_t>(a)] >
                                             dist[static_cast<std::size_t>(b)];
                                  return a < b;
                              });
            for (int k = 0; k < beam_width && k < static_cast<int>(ids.size()); ++k) {
                int ext = ids[static_cast<std::size_t>(k)];
                double p = dist[static_cast<std::size_t>(ext)];
                if (p <= 0.0) continue;
                Candidate cand;
                cand.hyp = hi;
                cand.ext_id = ext;
                cand.logp = active[hi].logp + std::log(p);
                cand.state = next;
                // provenance: compare copy vs generation mass for this token
                double copy_mass = 0.0;
                int best_pos = -1;
                double best_att = -1.0;
                for (int i = 0; i < src.length; ++i) {
                    if (src.ext_ids[static_cast<std::size_t>(i)] == ext) {
                        copy_mass += attn[static_cast<std::size_t>(i)];
                        if (attn[static_cast<std::size_t>(i)] > best_att) {
                            best_att = attn[static_cast<std::size_t>(i)];
                            best_pos = i;
                        }
                    }
                }
                copy_mass *= 1.0 - p_gen_value;
                double gen_mass = p - copy_mass;  // the mixture's generation share
                cand.prov.copied = copy_mass > gen_mass;
                cand.prov.source_position = cand.prov.copied ? best_pos : -1;
                cand.prov.p_gen = p_gen_value;
                cand.prov.token = ext < vocab.size()
                                      ? vocab.token(ext)
                                      : src.oov_tokens[static_cast<std::size_t>(ext - vocab.size())];
                pool.push_back(std::move(cand));
            }
        }
        if (pool.empty()) break;
        std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
            if (a.logp != b.logp) return a.logp > b.logp;
            if (a.hyp != b.hyp) return a.hyp < b.hyp;
            return a.ext_id < b.ext_id;
        });

        std::vector<Hypothesis> next_active;
        int taken = 0;
        for (const auto& cand : pool) {
            if (taken >= beam_width) break;
            ++taken;
            Hypothesis hyp = active[cand.hyp];
            hyp.state = cand.state;
            hyp.logp = cand.logp;
            hyp.ext_tokens.push_back(cand.ext_id);
            hyp.provenance.push_back(cand.prov);
            if (cand.ext_id == Vocab::kEos) {
                finished.push_back(std::move(hyp));
            } else {
                hyp.prev = cand.ext_id < vocab.size() ? cand.ext_id : Vocab::kUnk;
                next_active.push_back(std::move(hyp));
            }
        }
        active = std::move(next_active);
    }
    for (auto& hyp : active) finished.push_back(std::move(hyp));

    GenerationResult result;
    if (finished.empty()) return result;
    std::size_t best = 0;
    double best_score = normalized(finished[0].logp, finished[0].ext_tokens.size());
    for (std::size_t i = 1; i < finished.size(); ++i) {
        double s = normalized(finished[i].logp, finished[i].ext_tokens.size());
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    const Hypothesis& winner = finished[best];
    result.score = best_score;
    for (std::size_t i = 0; i < winner.ext_tokens.size(); ++i) {
        if (winner.ext_tokens[i] == Vocab::kEos) break;
        result.tokens.push_back(winner.provenance[i].token);
        result.provenance.push_back(winner.provenance[i]);
    }
    if (result.tokens.empty())
        std::cerr << "[warn] empty generation for doc " << instance.doc_id << "\n";
    return result;
}

std::vector<int> expand_mask_to_tokens(const Instance& instance,
                                       const std::vector<int>& real_token_bits) {
    auto real = real_token_positions(instance);
    detail::check(real.size() == real_token_bits.size(),
                  "expand_mask_to_tokens: mask does not match the instance's real tokens");
    std::vector<int> bits(instance.tokens.size(), 0);
    for (std::size_t i = 0; i < real.size(); ++i)
        bits[static_cast<std::size_t>(real[i])] = real_token_bits[i];
    return bits;
}

}  // namespace casumm
