#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "casumm/errors.hpp"
#include "casumm/grad_check.hpp"
#include "casumm/selector.hpp"

using namespace casumm;

namespace {

Vocab toy_vocab() {
    Document doc;
    doc.id = "v";
    doc.sentences = {{"alpha", "bravo", "charlie", "delta", "echo", "foxtrot",
                      "golf", "hotel", "india", "juliet", "the", "of", "."}};
    return build_vocab({doc}, 64);
}

Instance singleton_instance() {
    Instance inst;
    inst.doc_id = "d";
    inst.sent_idx = {0};
    inst.tokens = {"alpha", "bravo", "charlie"};
    inst.label = 1;
    inst.highlights = {1, 0, 1};
    inst.target = {"alpha", "charlie"};
    return inst;
}

Instance pair_instance() {
    Instance inst;
    inst.doc_id = "d";
    inst.sent_idx = {0, 2};
    inst.tokens = {"alpha", "bravo", "<sep>", "delta", "echo"};
    inst.label = 1;
    inst.highlights = {1, 0, 0, 1, 0};
    inst.target = {"alpha", "delta"};
    return inst;
}

SelectorConfig small_config(const Vocab& vocab) {
    SelectorConfig config;
    config.vocab_size = vocab.size();
    config.layers = 1;
    config.heads = 2;
    config.d_model = 16;
    config.d_ff = 32;
    config.max_len = 32;
    return config;
}

}  // namespace

TEST_CASE("input assembly: segments and specials") {
    auto vocab = toy_vocab();
    auto single = assemble_selector_input(singleton_instance(), vocab);
    CHECK(single.ids.front() == Vocab::kCls);
    CHECK(single.ids.back() == Vocab::kSep);
    for (int s : single.segments) CHECK(s == 0);
    CHECK(single.real_positions.size() == 3);

    auto pair = assemble_selector_input(pair_instance(), vocab);
    // segment flips exactly once, right after the first [SEP]
    int flips = 0;
    for (std::size_t i = 1; i < pair.segments.size(); ++i)
        if (pair.segments[i] != pair.segments[i - 1]) {
            ++flips;
            CHECK(pair.ids[i - 1] == Vocab::kSep);
        }
    CHECK(flips == 1);
    CHECK(pair.segments.front() == 0);
    CHECK(pair.segments.back() == 1);
    CHECK(pair.real_positions.size() == 4);
}

TEST_CASE("zero heads give probability one half") {
    auto vocab = toy_vocab();
    SelectorModel model(small_config(vocab), 5);
    model.params().find("u")->value.fill(0.0);
    model.params().find("v")->value.fill(0.0);
    for (const auto& inst : {singleton_instance(), pair_instance()}) {
        auto score = score_instance(inst, model, vocab);
        CHECK(score.p_sent == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(score.token_probs.size() == real_token_positions(inst).size());
        for (double p : score.token_probs) CHECK(p == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("selector loss boundaries and analytic value") {
    auto vocab = toy_vocab();
    SelectorModel model(small_config(vocab), 5);
    auto inst = singleton_instance();

    auto loss_at = [&](double lambda, LossMode mode) {
        nn::Graph g;
        auto states = encode(g, inst, model, vocab);
        auto p_sent = score_instance_node(g, states, model);
        auto token_probs = score_tokens_node(g, states, model);
        auto loss = selector_loss_node(g, p_sent, token_probs, inst, lambda, mode);
        double p = g.scalar_value(p_sent);
        double sent_bce = -std::log(p);  // label is 1
        const auto& probs = g.value(token_probs).v;
        double tok_bce = 0.0;
        auto real = real_token_positions(inst);
        for (std::size_t i = 0; i < probs.size(); ++i) {
            double y = inst.highlights[static_cast<std::size_t>(real[i])];
            tok_bce += -(y * std::log(probs[i]) + (1 - y) * std::log(1 - probs[i]));
        }
        tok_bce /= static_cast<double>(probs.size());
        return std::make_tuple(g.scalar_value(loss), sent_bce, tok_bce);
    };

    auto [l0, sent0, tok0] = loss_at(0.0, LossMode::convex);
    CHECK(l0 == doctest::Approx(sent0).epsilon(1e-12));
    auto [l1, sent1, tok1] = loss_at(1.0, LossMode::convex);
    CHECK(l1 == doctest::Approx(tok1).epsilon(1e-12));
    auto [la, senta, toka] = loss_at(0.3, LossMode::additive);
    CHECK(la == doctest::Approx(senta + 0.3 * toka).epsilon(1e-12));

    // p = 0.5 everywhere makes the lambda=0.2 loss exactly ln 2
    model.params().find("u")->value.fill(0.0);
    model.params().find("v")->value.fill(0.0);
    auto [lhalf, s_, t_] = loss_at(0.2, LossMode::convex);
    CHECK(lhalf == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("padding never affects real positions") {
    auto vocab = toy_vocab();
    SelectorModel model(small_config(vocab), 17);
    for (const auto& inst : {singleton_instance(), pair_instance()}) {
        nn::Graph g1, g2;
        auto s1 = encode(g1, inst, model, vocab);
        auto s2 = encode(g2, inst, model, vocab, 20);
        auto p1 = g1.scalar_value(score_instance_node(g1, s1, model));
        auto p2 = g2.scalar_value(score_instance_node(g2, s2, model));
        CHECK(std::fabs(p1 - p2) < 1e-12);
        const auto& t1 = g1.value(score_tokens_node(g1, s1, model)).v;
        const auto& t2 = g2.value(score_tokens_node(g2, s2, model)).v;
        REQUIRE(t1.size() == t2.size());
        for (std::size_t i = 0; i < t1.size(); ++i) CHECK(std::fabs(t1[i] - t2[i]) < 1e-12);
    }
}

TEST_CASE("scaling u by a positive constant preserves score order") {
    auto vocab = toy_vocab();
    SelectorModel model(small_config(vocab), 23);
    std::vector<Instance> insts = {singleton_instance(), pair_instance()};
    Instance third = singleton_instance();
    third.tokens = {"juliet", "india", "hotel", "golf"};
    third.highlights = {0, 0, 0, 0};
    insts.push_back(third);

    auto order_of = [&] {
        std::vector<std::pair<double, int>> scored;
        for (std::size_t i = 0; i < insts.size(); ++i)
            scored.emplace_back(-score_instance(insts[i], model, vocab).p_sent,
                                static_cast<int>(i));
        std::sort(scored.begin(), scored.end());
        std::vector<int> order;
        for (auto& [p, i] : scored) order.push_back(i);
        return order;
    };
    auto before = order_of();
    for (auto& x : model.params().find("u")->value.v) x *= 7.5;
    CHECK(order_of() == before);
}

TEST_CASE("grad_check on the full selector loss") {
    auto vocab = toy_vocab();
    SelectorConfig config = small_config(vocab);
    config.d_model = 8;
    config.d_ff = 12;
    SelectorModel model(config, 31);
    auto inst = pair_instance();
    auto loss_fn = [&](bool with_grad) {
        nn::Graph g;
        auto states = encode(g, inst, model, vocab);
        auto p_sent = score_instance_node(g, states, model);
        auto token_probs = score_tokens_node(g, states, model);
        auto loss = selector_loss_node(g, p_sent, token_probs, inst, 0.2);
        if (with_grad) g.backward(loss);
        return g.scalar_value(loss);
    };
    auto report = nn::grad_check(model.params(), loss_fn, 1e-5, 1e-4);
    INFO("worst ", report.worst_param, " err ", report.max_rel_err);
    CHECK(report.pass);
}

TEST_CASE("lambda zero leaves the token head untouched") {
    auto vocab = toy_vocab();
    SelectorModel model(small_config(vocab), 37);
    auto inst = singleton_instance();
    nn::Graph g;
    auto states = encode(g, inst, model, vocab);
    auto p_sent = score_instance_node(g, states, model);
    auto token_probs = score_tokens_node(g, states, model);
    auto loss = selector_loss_node(g, p_sent, token_probs, inst, 0.0);
    model.params().zero_grads();
    g.backward(loss);
    for (double gv : model.params().find("v")->grad.v) CHECK(gv == 0.0);
}

TEST_CASE("overlong instances error; truncation trims and warns") {
    auto vocab = toy_vocab();
    SelectorConfig config = small_config(vocab);
    config.max_len = 8;
    SelectorModel model(config, 3);
    Instance inst = singleton_instance();
    inst.tokens = std::vector<std::string>(20, "alpha");
    inst.highlights.assign(20, 0);
    nn::Graph g;
    CHECK_THROWS_AS(encode(g, inst, model, vocab), DataError);

    truncate_instance(inst, 5);
    CHECK(inst.tokens.size() == 5);
    CHECK(inst.highlights.size() == 5);
    nn::Graph g2;
    CHECK_NOTHROW(encode(g2, inst, model, vocab));
}

TEST_CASE("training is seeded-deterministic and learns a separable toy set") {
    auto vocab = toy_vocab();
    std::vector<Instance> data;
    // positives mention alpha/bravo, negatives juliet/india
    for (int i = 0; i < 4; ++i) {
        Instance pos;
        pos.doc_id = "d";
        pos.sent_idx = {0};
        pos.tokens = {"alpha", "bravo", i % 2 ? "charlie" : "delta"};
        pos.label = 1;
        pos.highlights = {1, 1, 0};
        pos.target = {"alpha", "bravo"};
        data.push_back(pos);
        Instance neg;
        neg.doc_id = "d";
        neg.sent_idx = {1};
        neg.tokens = {"juliet", "india", i % 2 ? "hotel" : "golf"};
        neg.label = 0;
        neg.highlights = {0, 0, 0};
        data.push_back(neg);
    }
    SelectorConfig config = small_config(vocab);
    TrainConfig train;
    train.epochs = 60;
    train.seed = 99;
    train.adam.lr = 5e-3;

    std::vector<EpochLog> log;
    auto model = train_selector(data, vocab, config, train, &log);
    CHECK(log.size() == 60);
    CHECK(log.back().accuracy == 1.0);
    for (const auto& inst : data) {
        double p = score_instance(inst, model, vocab).p_sent;
        if (inst.label == 1) CHECK(p > 0.8);
        else CHECK(p < 0.2);
    }

    // bit-identical checkpoints under the same seed
    auto model2 = train_selector(data, vocab, config, train);
    auto p1 = std::filesystem::temp_directory_path() / "casumm_sel_a.ckpt";
    auto p2 = std::filesystem::temp_directory_path() / "casumm_sel_b.ckpt";
    model.save(p1.string());
    model2.save(p2.string());
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    CHECK_FALSE(b1.empty());

    // checkpoint reload reproduces scores exactly
    auto reloaded = SelectorModel::load(p1.string());
    for (const auto& inst : data) {
        CHECK(score_instance(inst, reloaded, vocab).p_sent ==
              score_instance(inst, model, vocab).p_sent);
    }
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("train_selector preconditions") {
    auto vocab = toy_vocab();
    SelectorConfig config = small_config(vocab);
    TrainConfig train;
    CHECK_THROWS_AS(train_selector({}, vocab, config, train), DataError);
    Instance neg;
    neg.doc_id = "d";
    neg.sent_idx = {0};
    neg.tokens = {"alpha"};
    neg.highlights = {0};
    CHECK_THROWS_AS(train_selector({neg}, vocab, config, train), DataError);
}

TEST_CASE("rank_instances: contracts and untrained tie-break order") {
    auto vocab = toy_vocab();
    SelectorModel model(small_config(vocab), 3);
    model.params().find("u")->value.fill(0.0);  // every candidate scores 0.5

    Document doc;
    doc.id = "r";
    doc.sentences = {{"alpha", "bravo"}, {"charlie", "delta"}, {"echo", "foxtrot"},
                     {"golf", "hotel"}, {"india", "juliet"}};
    auto top = rank_instances(doc, model, vocab, 4);
    REQUIRE(top.size() == 4);
    // all scores tie, so the lexicographic candidate order wins and
    // disjointness forces singletons 0..3
    for (int i = 0; i < 4; ++i) {
        CHECK(top[static_cast<std::size_t>(i)].instance.sent_idx == std::vector<int>{i});
        CHECK(top[static_cast<std::size_t>(i)].p_sent == doctest::Approx(0.5).epsilon(1e-15));
    }
    // pairwise sentence-disjoint
    std::vector<bool> seen(doc.sentences.size(), false);
    for (const auto& entry : top)
        for (int idx : entry.instance.sent_idx) {
            CHECK_FALSE(seen[static_cast<std::size_t>(idx)]);
            seen[static_cast<std::size_t>(idx)] = true;
        }

    Document tiny;
    tiny.id = "t";
    tiny.sentences = {{"alpha", "bravo"}};
    auto only = rank_instances(tiny, model, vocab, 4);
    CHECK(only.size() == 1);

    RankOptions overlapping;
    overlapping.sentence_disjoint = false;
    auto free_top = rank_instances(doc, model, vocab, 4, overlapping);
    CHECK(free_top.size() == 4);
    CHECK(free_top[0].instance.sent_idx == std::vector<int>{0});
    CHECK(free_top[1].instance.sent_idx == std::vector<int>{0, 1});
}
