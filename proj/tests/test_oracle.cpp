#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "casumm/errors.hpp"
#include "casumm/oracle.hpp"
#include "casumm/rng.hpp"
#include "casumm/rouge.hpp"
#include "support/reference_impls.hpp"

using namespace casumm;

namespace {

std::vector<std::string> lem(const std::vector<std::string>& toks) {
    std::vector<std::string> out;
    for (const auto& t : toks) out.push_back(lemmatize(t));
    return out;
}

// exhaustive alignment with independent scoring, replicating the contract:
// mean of brute-force R1/R2 recall on lemmas, pair wins only beyond margin
Alignment brute_align(const Document& doc, const std::vector<std::string>& ref,
                      const OracleOptions& opts) {
    auto metric = [&](const std::vector<int>& idx) {
        auto cand = candidate_tokens(doc, idx);
        auto r1 = casumm_tests::brute_rouge_n(lem(cand), lem(ref), 1).recall;
        auto r2 = casumm_tests::brute_rouge_n(lem(cand), lem(ref), 2).recall;
        return 0.5 * (r1 + r2);
    };
    int n = static_cast<int>(doc.sentences.size());
    Alignment bs, bp;
    bool hs = false, hp = false;
    for (int i = 0; i < n; ++i) {
        double m = metric({i});
        if (!hs || m > bs.score) bs = {{i}, m}, hs = true;
    }
    int w = std::min(n, opts.pair_window);
    for (int i = 0; i < w; ++i)
        for (int j = i + 1; j < w; ++j) {
            double m = metric({i, j});
            if (!hp || m > bp.score) bp = {{i, j}, m}, hp = true;
        }
    if (hp && bp.score > bs.score + opts.pair_margin) return bp;
    return bs;
}

Document toy_doc() {
    Document doc;
    doc.id = "toy";
    doc.sentences = {
        {"alpha", "bravo", "charlie", "delta"},
        {"echo", "foxtrot", "golf", "hotel"},
        {"india", "juliet", "kilo", "lima"},
        {"the", "storm", "flooded", "the", "village", "roads"},
        {"mike", "november", "oscar", "papa"},
    };
    return doc;
}

}  // namespace

TEST_CASE("align: verbatim sentence wins as a singleton") {
    auto doc = toy_doc();
    std::vector<std::string> ref = doc.sentences[3];
    auto a = align_summary_sentence(doc, ref);
    CHECK(a.sent_idx == std::vector<int>{3});
    CHECK(a.score == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("align: merged halves of two sentences align to the pair") {
    auto doc = toy_doc();
    // reference takes half of sentence 1 and half of sentence 4
    std::vector<std::string> ref = {"echo", "foxtrot", "mike", "november"};
    auto a = align_summary_sentence(doc, ref);
    CHECK(a.sent_idx == std::vector<int>{1, 4});
    double single_best = 0.0;
    for (std::size_t i = 0; i < doc.sentences.size(); ++i)
        single_best = std::max(single_best,
                               alignment_metric(doc.sentences[i], ref));
    CHECK(a.score > single_best);
    auto brute = brute_align(doc, ref, {});
    CHECK(a.sent_idx == brute.sent_idx);
    CHECK(a.score == doctest::Approx(brute.score).epsilon(1e-12));
}

TEST_CASE("align: single-sentence document") {
    Document doc;
    doc.id = "one";
    doc.sentences = {{"alpha", "bravo"}};
    std::vector<std::string> ref = {"alpha", "zulu"};
    auto a = align_summary_sentence(doc, ref);
    CHECK(a.sent_idx == std::vector<int>{0});
    CHECK(a.score == doctest::Approx(alignment_metric(doc.sentences[0], ref)).epsilon(1e-15));
}

TEST_CASE("align agrees with brute force on randomized toy documents") {
    Rng rng(314);
    std::vector<std::string> pool = {"ant", "bee", "cat", "dog", "elk", "fox",
                                     "gnu", "hen", "ibis", "jay", "koi", "lark"};
    for (int trial = 0; trial < 30; ++trial) {
        Document doc;
        doc.id = "rnd";
        int ns = 2 + static_cast<int>(rng.below(6));
        for (int s = 0; s < ns; ++s) {
            std::vector<std::string> sent;
            int nt = 2 + static_cast<int>(rng.below(5));
            for (int t = 0; t < nt; ++t) sent.push_back(pool[rng.below(pool.size())]);
            doc.sentences.push_back(sent);
        }
        std::vector<std::string> ref;
        int rt = 2 + static_cast<int>(rng.below(5));
        for (int t = 0; t < rt; ++t) ref.push_back(pool[rng.below(pool.size())]);
        auto got = align_summary_sentence(doc, ref);
        auto want = brute_align(doc, ref, {});
        CHECK(got.sent_idx == want.sent_idx);
        CHECK(got.score == doctest::Approx(want.score).epsilon(1e-12));
    }
}

TEST_CASE("make_highlight_labels worked example") {
    std::vector<std::string> tokens = {"a", "duke", "student", "admitted", "."};
    std::vector<std::string> ref = {"duke", "student", "admits"};
    CHECK(make_highlight_labels(tokens, ref) == std::vector<int>{0, 1, 1, 1, 0});

    // no shared lemmas
    CHECK(make_highlight_labels({"alpha", "bravo"}, {"zulu"}) == std::vector<int>{0, 0});
    // identical token lists without punctuation
    CHECK(make_highlight_labels({"alpha", "bravo"}, {"alpha", "bravo"}) ==
          std::vector<int>{1, 1});
}

TEST_CASE("smooth_labels worked examples") {
    CHECK(smooth_labels({0, 1, 0, 1, 1}, {"the", "president", "of", "the", "union"}) ==
          std::vector<int>{0, 1, 1, 1, 1});
    CHECK(smooth_labels({0, 0, 1, 0}, {"he", "said", "that", "today"}) ==
          std::vector<int>{0, 0, 0, 0});
    CHECK(smooth_labels({1, 1, 1}, {"big", "of", "storm"}) == std::vector<int>{1, 1, 1});
    CHECK_THROWS_AS(smooth_labels({1, 0}, {"one"}), DataError);
}

TEST_CASE("smooth_labels properties on random masks") {
    Rng rng(77);
    std::vector<std::string> pool = {"the", "of", "that", "storm", "village", "roads", "flood"};
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t n = 1 + rng.below(10);
        std::vector<std::string> toks;
        std::vector<int> mask;
        for (std::size_t i = 0; i < n; ++i) {
            toks.push_back(pool[rng.below(pool.size())]);
            mask.push_back(static_cast<int>(rng.below(2)));
        }
        auto out = smooth_labels(mask, toks);
        for (std::size_t i = 0; i < n; ++i) {
            if (mask[i] == 1 && out[i] == 0) {
                CHECK(is_stopword(toks[i]));  // only stopwords may be dropped
            }
            if (mask[i] == 0 && out[i] == 1) {
                // only bridged between two highlighted neighbours
                REQUIRE(i > 0);
                REQUIRE(i + 1 < n);
                CHECK(mask[i - 1] == 1);
                CHECK(mask[i + 1] == 1);
            }
        }
    }
}

TEST_CASE("build_instances: counts, boundaries, errors, determinism") {
    Document doc = toy_doc();
    doc.summary = {doc.sentences[0], {"echo", "foxtrot", "mike", "november"}};

    auto instances = build_instances({doc}, 1, 99);
    CHECK(instances.size() == 4);
    int positives = 0;
    for (const auto& i : instances) positives += i.label;
    CHECK(positives == 2);
    for (const auto& i : instances) {
        CHECK(i.highlights.size() == i.tokens.size());
        if (i.label == 0) {
            CHECK(i.target.empty());
            for (int b : i.highlights) CHECK(b == 0);
        } else {
            CHECK_FALSE(i.target.empty());
        }
    }

    auto only_pos = build_instances({doc}, 0, 99);
    CHECK(only_pos.size() == 2);
    for (const auto& i : only_pos) CHECK(i.label == 1);

    Document no_summary = toy_doc();
    try {
        build_instances({no_summary}, 1, 99);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("toy") != std::string::npos);
    }

    // byte-identical files under the same seed
    auto p1 = std::filesystem::temp_directory_path() / "casumm_inst_a.jsonl";
    auto p2 = std::filesystem::temp_directory_path() / "casumm_inst_b.jsonl";
    save_instances(p1.string(), build_instances({doc}, 2, 1234));
    save_instances(p2.string(), build_instances({doc}, 2, 1234));
    std::ifstream f1(p1), f2(p2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK_FALSE(s1.str().empty());
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("instance file round trip") {
    Document doc = toy_doc();
    doc.summary = {doc.sentences[2]};
    auto instances = build_instances({doc}, 1, 7);
    auto path = std::filesystem::temp_directory_path() / "casumm_inst_rt.jsonl";
    save_instances(path.string(), instances);
    auto loaded = load_instances(path.string());
    REQUIRE(loaded.size() == instances.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].doc_id == instances[i].doc_id);
        CHECK(loaded[i].sent_idx == instances[i].sent_idx);
        CHECK(loaded[i].tokens == instances[i].tokens);
        CHECK(loaded[i].label == instances[i].label);
        CHECK(loaded[i].highlights == instances[i].highlights);
        CHECK(loaded[i].target == instances[i].target);
    }
    std::filesystem::remove(path);
}

TEST_CASE("positive highlights capture exactly the reachable target content") {
    // pre-smoothing labels: R1 recall of the highlighted tokens against the
    // punctuation-free target equals the recall of the full instance, i.e.
    // highlighting loses nothing that the instance could contribute
    Rng rng(2718);
    std::vector<std::string> pool = {"storm", "flooded", "village", "roads", "mayor",
                                     "said", "the", "of", "crews", "cleared", "."};
    for (int trial = 0; trial < 50; ++trial) {
        Document doc;
        doc.id = "p";
        int ns = 2 + static_cast<int>(rng.below(4));
        for (int s = 0; s < ns; ++s) {
            std::vector<std::string> sent;
            int nt = 3 + static_cast<int>(rng.below(5));
            for (int t = 0; t < nt; ++t) sent.push_back(pool[rng.below(pool.size())]);
            doc.sentences.push_back(sent);
        }
        std::vector<std::string> ref;
        int rt = 2 + static_cast<int>(rng.below(5));
        for (int t = 0; t < rt; ++t) ref.push_back(pool[rng.below(pool.size())]);
        auto alignment = align_summary_sentence(doc, ref);
        auto tokens = candidate_tokens(doc, alignment.sent_idx);
        auto raw = make_highlight_labels(tokens, ref);

        std::vector<std::string> target_content;
        for (const auto& t : ref)
            if (!is_punctuation(t)) target_content.push_back(lemmatize(t));
        if (target_content.empty()) continue;

        std::vector<std::string> highlighted, instance_content;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (tokens[i] == kSepToken || is_punctuation(tokens[i])) continue;
            instance_content.push_back(lemmatize(tokens[i]));
            if (raw[i] == 1) highlighted.push_back(lemmatize(tokens[i]));
        }
        double via_highlights =
            casumm_tests::brute_rouge_n(highlighted, target_content, 1).recall;
        double via_instance =
            casumm_tests::brute_rouge_n(instance_content, target_content, 1).recall;
        CHECK(via_highlights == doctest::Approx(via_instance).epsilon(1e-12));
    }
}
