#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "casumm/errors.hpp"
#include "casumm/pipeline.hpp"
#include "support/reference_impls.hpp"
#include "support/toy_corpus.hpp"

using namespace casumm;

namespace {

namespace fs = std::filesystem;

struct Fixture {
    casumm_tests::ToyCorpus corpus;
    Vocab vocab;
    SelectorModel selector;
    FusionModel fusion;
    RunConfig config;

    static Fixture make() {
        auto corpus = casumm_tests::make_toy_corpus(4, 11);
        auto vocab = build_vocab(corpus.docs, 2000);

        RunConfig config;
        config.k = 2;
        config.pair_window = 10;
        config.strategy = StrategyKind::threshold;
        config.strategy_param = 0.15;
        config.beam_width = 2;
        config.max_len = 12;
        config.sel_layers = 1;
        config.sel_heads = 2;
        config.sel_dim = 16;
        config.sel_ff = 32;
        config.sel_max_len = 32;
        config.fus_emb = 16;
        config.fus_hidden = 16;

        auto instances = build_instances(corpus.docs, 1, 5);
        TrainConfig sel_train = config.train_config("");
        sel_train.epochs = 12;
        sel_train.seed = 21;
        sel_train.adam.lr = 5e-3;
        sel_train.quiet = true;
        auto selector =
            train_selector(instances, vocab, config.selector_config(vocab.size()), sel_train);

        std::vector<Instance> positives;
        for (const auto& inst : instances)
            if (inst.label == 1) positives.push_back(inst);
        TrainConfig fus_train = sel_train;
        fus_train.epochs = 25;
        auto fusion =
            train_fusion(positives, vocab, config.fusion_config(vocab.size()), fus_train);

        return Fixture{std::move(corpus), std::move(vocab), std::move(selector),
                       std::move(fusion), std::move(config)};
    }
};

Fixture& fixture() {
    static Fixture f = Fixture::make();
    return f;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config file parsing, overrides and errors") {
    auto path = fs::temp_directory_path() / "casumm_cfg_test.cfg";
    {
        std::ofstream os(path);
        os << "# comment line\n";
        os << "k = 3\n";
        os << "strategy = prop_document\n";
        os << "strategy_param = 0.4\n";
        os << "lambda=0.25\n";
        os << "disjoint = false\n";
        os << "\n";
    }
    auto config = load_run_config(path.string());
    CHECK(config.k == 3);
    CHECK(config.strategy == StrategyKind::prop_document);
    CHECK(config.strategy_param == doctest::Approx(0.4));
    CHECK(config.lambda == doctest::Approx(0.25));
    CHECK_FALSE(config.disjoint);
    fs::remove(path);

    RunConfig base;
    CHECK_THROWS_AS(apply_config_entry(base, "no_such_key", "1"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(base, "k", "many"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(base, "strategy", "sideways"), ConfigError);

    apply_config_entry(base, "order", "document");
    CHECK(base.order == OrderMode::document);
}

TEST_CASE("summarize: k contract, provenance and determinism") {
    auto& f = fixture();
    const auto& doc = f.corpus.docs[0];

    RunConfig one = f.config;
    one.k = 1;
    auto single = summarize(doc, f.selector, f.fusion, f.vocab, one);
    CHECK(single.sentences.size() == 1);
    REQUIRE(single.provenance.size() == 1);
    CHECK_FALSE(single.provenance[0].sent_idx.empty());
    for (int idx : single.provenance[0].sent_idx) {
        CHECK(idx >= 0);
        CHECK(idx < static_cast<int>(doc.sentences.size()));
    }

    auto a = summarize(doc, f.selector, f.fusion, f.vocab, f.config);
    auto b = summarize(doc, f.selector, f.fusion, f.vocab, f.config);
    CHECK(a.sentences == b.sentences);
    REQUIRE(a.provenance.size() == b.provenance.size());
    for (std::size_t i = 0; i < a.provenance.size(); ++i) {
        CHECK(a.provenance[i].sent_idx == b.provenance[i].sent_idx);
        CHECK(a.provenance[i].p_sent == b.provenance[i].p_sent);
        CHECK(a.provenance[i].mask == b.provenance[i].mask);
    }
    CHECK(a.sentences.size() <= static_cast<std::size_t>(f.config.k));

    // provenance masks align with each selected instance's real tokens
    for (const auto& prov : a.provenance) {
        auto tokens = candidate_tokens(doc, prov.sent_idx);
        Instance skeleton;
        skeleton.tokens = tokens;
        CHECK(prov.mask.size() == real_token_positions(skeleton).size());
    }
}

TEST_CASE("summary files round-trip through save/load") {
    auto& f = fixture();
    std::vector<SummaryOutput> outputs;
    for (const auto& doc : f.corpus.docs)
        outputs.push_back(summarize(doc, f.selector, f.fusion, f.vocab, f.config));

    auto path = fs::temp_directory_path() / "casumm_sum_rt.jsonl";
    save_summaries(path.string(), outputs);
    auto loaded = load_summaries(path.string());
    REQUIRE(loaded.size() == outputs.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].doc_id == outputs[i].doc_id);
        CHECK(loaded[i].sentences == outputs[i].sentences);
        REQUIRE(loaded[i].provenance.size() == outputs[i].provenance.size());
        for (std::size_t j = 0; j < loaded[i].provenance.size(); ++j) {
            CHECK(loaded[i].provenance[j].sent_idx == outputs[i].provenance[j].sent_idx);
            CHECK(loaded[i].provenance[j].mask == outputs[i].provenance[j].mask);
            CHECK(loaded[i].provenance[j].strategy == outputs[i].provenance[j].strategy);
        }
    }
    // evaluate consumes exactly what summarize produced
    auto eval = evaluate(f.corpus.docs, loaded);
    CHECK(eval.documents == static_cast<long>(f.corpus.docs.size()));
    fs::remove(path);
}

TEST_CASE("evaluate identities and id mismatch") {
    auto& f = fixture();
    std::vector<SummaryOutput> perfect;
    for (const auto& doc : f.corpus.docs) {
        SummaryOutput out;
        out.doc_id = doc.id;
        out.sentences = doc.summary;
        perfect.push_back(std::move(out));
    }
    auto eval = evaluate(f.corpus.docs, perfect);
    for (const auto& [metric, score] : eval.mean) {
        CHECK(score.recall == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(score.precision == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(score.f1 == doctest::Approx(1.0).epsilon(1e-12));
    }

    std::vector<SummaryOutput> empty_outputs;
    for (const auto& doc : f.corpus.docs) {
        SummaryOutput out;
        out.doc_id = doc.id;
        empty_outputs.push_back(std::move(out));
    }
    auto zero = evaluate(f.corpus.docs, empty_outputs);
    for (const auto& [metric, score] : zero.mean) CHECK(score.f1 == 0.0);

    auto mismatched = perfect;
    mismatched[0].doc_id = "ghost";
    try {
        evaluate(f.corpus.docs, mismatched);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        std::string what = e.what();
        CHECK(what.find("ghost") != std::string::npos);
        CHECK(what.find(f.corpus.docs[0].id) != std::string::npos);
    }

    // corpus mean equals the brute-force per-document average
    std::vector<SummaryOutput> mixed;
    for (const auto& doc : f.corpus.docs) {
        SummaryOutput out;
        out.doc_id = doc.id;
        out.sentences = {doc.sentences[0]};
        mixed.push_back(std::move(out));
    }
    auto got = evaluate(f.corpus.docs, mixed);
    std::map<std::string, double> want;
    for (const auto& doc : f.corpus.docs) {
        auto scores = casumm_tests::brute_rouge_summary({doc.sentences[0]}, doc.summary);
        for (const auto& [metric, s] : scores) want[metric] += s.f1;
    }
    for (auto& [metric, total] : want) {
        CHECK(got.mean.at(metric).f1 ==
              doctest::Approx(total / static_cast<double>(f.corpus.docs.size())).epsilon(1e-12));
    }
}

TEST_CASE("render and csv output") {
    auto& f = fixture();
    std::vector<SummaryOutput> perfect;
    for (const auto& doc : f.corpus.docs) {
        SummaryOutput out;
        out.doc_id = doc.id;
        out.sentences = doc.summary;
        perfect.push_back(std::move(out));
    }
    auto eval = evaluate(f.corpus.docs, perfect);
    auto table = render_eval_table(eval);
    CHECK(table.find("R-1") != std::string::npos);
    CHECK(table.find("100.00") != std::string::npos);

    auto path = fs::temp_directory_path() / "casumm_eval.csv";
    write_eval_csv(path.string(), eval);
    auto text = slurp(path);
    CHECK(text.find("metric,recall,precision,f1") == 0);
    CHECK(text.find("rouge2") != std::string::npos);
    fs::remove(path);
}

TEST_CASE("extract_tag_summary boundaries") {
    auto& f = fixture();
    const auto& doc = f.corpus.docs[1];

    RunConfig all = f.config;
    all.strategy = StrategyKind::threshold;
    all.strategy_param = 0.0;  // all-ones masks
    auto tagged = extract_tag_summary(doc, f.selector, f.vocab, all);
    REQUIRE(!tagged.sentences.empty());
    for (std::size_t i = 0; i < tagged.sentences.size(); ++i) {
        auto tokens = candidate_tokens(doc, tagged.provenance[i].sent_idx);
        Instance skeleton;
        skeleton.tokens = tokens;
        std::vector<std::string> real;
        for (int pos : real_token_positions(skeleton))
            real.push_back(tokens[static_cast<std::size_t>(pos)]);
        CHECK(tagged.sentences[i] == real);
    }

    RunConfig none = f.config;
    none.strategy_param = 1.0;  // nothing clears the threshold
    auto empty_tagged = extract_tag_summary(doc, f.selector, f.vocab, none);
    for (const auto& sent : empty_tagged.sentences) CHECK(sent.empty());

    // extraction-based outputs evaluate to finite scores
    auto eval = evaluate({doc}, {tagged});
    for (const auto& [metric, score] : eval.mean) {
        CHECK(score.f1 >= 0.0);
        CHECK(score.f1 <= 1.0);
    }
}

TEST_CASE("oracle_summarize modes") {
    auto& f = fixture();
    const auto& doc = f.corpus.docs[2];

    // ground-truth tags on extractable references reproduce them exactly
    auto gt = oracle_summarize(doc, OracleMode::gt_sent_gt_tag, nullptr, nullptr, f.vocab,
                               f.config);
    CHECK(gt.sentences == doc.summary);
    auto eval = evaluate({doc}, {gt});
    for (const auto& [metric, score] : eval.mean)
        CHECK(score.f1 == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& prov : gt.provenance) CHECK(prov.strategy == "gt_tag");

    auto sys = oracle_summarize(doc, OracleMode::gt_sent_sys_tag, &f.selector, nullptr, f.vocab,
                                f.config);
    CHECK(sys.sentences.size() == doc.summary.size());
    auto sys_eval = evaluate({doc}, {sys});
    CHECK(sys_eval.mean.at("rouge1").f1 <= 1.0 + 1e-12);

    auto fused = oracle_summarize(doc, OracleMode::gt_sent_gt_tag_fusion, nullptr, &f.fusion,
                                  f.vocab, f.config);
    CHECK(fused.sentences.size() == doc.summary.size());

    Document no_refs = doc;
    no_refs.summary.clear();
    CHECK_THROWS_AS(oracle_summarize(no_refs, OracleMode::gt_sent_gt_tag, nullptr, nullptr,
                                     f.vocab, f.config),
                    DataError);
    CHECK_THROWS_AS(oracle_summarize(doc, OracleMode::gt_sent_sys_tag, nullptr, nullptr, f.vocab,
                                     f.config),
                    ConfigError);
}

TEST_CASE("sweep rows: boundary and monotone highlight rate") {
    auto& f = fixture();
    std::vector<double> grid = {0.0, 0.3, 0.7};
    auto rows = sweep_thresholds(f.corpus.docs, f.selector, f.fusion, f.vocab, grid,
                                 {StrategyKind::threshold, StrategyKind::prop_instance},
                                 f.config);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].strategy == "threshold");
    CHECK(rows[0].param == 0.0);
    CHECK(rows[0].rate == doctest::Approx(1.0).epsilon(1e-12));  // tau 0 highlights everything
    CHECK(rows[0].rate >= rows[1].rate);
    CHECK(rows[1].rate >= rows[2].rate);
    for (const auto& row : rows) {
        CHECK(row.r1.f1 >= 0.0);
        CHECK(row.r1.f1 <= 1.0);
    }
    CHECK(rows[3].strategy == "proportional");
    CHECK(rows[3].scope == "instance");

    auto path = fs::temp_directory_path() / "casumm_sweep.csv";
    write_sweep_csv(path.string(), rows);
    auto text = slurp(path);
    CHECK(text.find("strategy,scope,param,highlight_rate,r1,r2,rl") == 0);
    fs::remove(path);

    CHECK_THROWS_AS(parse_grid(""), ConfigError);
    CHECK(parse_grid("0.1, 0.2").size() == 2);
    CHECK(parse_strategies("threshold,prop_document").size() == 2);
    CHECK_THROWS_AS(parse_strategies("bogus"), ConfigError);
}

TEST_CASE("document order mode sorts by first source sentence") {
    auto& f = fixture();
    const auto& doc = f.corpus.docs[3];
    RunConfig by_doc = f.config;
    by_doc.order = OrderMode::document;
    auto out = summarize(doc, f.selector, f.fusion, f.vocab, by_doc);
    for (std::size_t i = 1; i < out.provenance.size(); ++i)
        CHECK(out.provenance[i - 1].sent_idx.front() <= out.provenance[i].sent_idx.front());
}
