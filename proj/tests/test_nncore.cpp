#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "casumm/errors.hpp"

#include "casumm/adam.hpp"
#include "casumm/checkpoint.hpp"
#include "casumm/grad_check.hpp"
#include "casumm/graph.hpp"
#include "support/grad_suite.hpp"

using namespace casumm;
using nn::Graph;
using nn::ParameterStore;
using nn::Tensor;

TEST_CASE("sigmoid basics") {
    Graph g;
    auto x = g.input(Tensor::vec({0.0, 2.0, -2.0, 30.0}));
    auto y = g.sigmoid_(x);
    const Tensor& out = g.value(y);
    CHECK(out.v[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(out.v[1] + out.v[2] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::fabs(out.v[3] - 1.0) < 1e-12);
    for (double v : out.v) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("softmax basics") {
    Graph g;
    auto uniform = g.softmax(g.input(Tensor::vec({3.0, 3.0, 3.0, 3.0})), 0);
    for (double v : g.value(uniform).v) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

    auto a = g.softmax(g.input(Tensor::vec({1.0, 2.0, 3.0})), 0);
    auto b = g.softmax(g.input(Tensor::vec({11.0, 12.0, 13.0})), 0);
    for (int i = 0; i < 3; ++i) CHECK(g.value(a).v[i] == g.value(b).v[i]);

    // independent exp-normalize oracle
    double e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0);
    double z = e1 + e2 + e3;
    CHECK(g.value(a).v[0] == doctest::Approx(e1 / z).epsilon(1e-14));
    CHECK(g.value(a).v[1] == doctest::Approx(e2 / z).epsilon(1e-14));
    CHECK(g.value(a).v[2] == doctest::Approx(e3 / z).epsilon(1e-14));

    double s = 0.0;
    for (double v : g.value(a).v) s += v;
    CHECK(std::fabs(s - 1.0) < 1e-12);
}

TEST_CASE("grad_check on quadratic") {
    ParameterStore store;
    auto& p = store.add("x", {2});
    p.value.v = {1.0, 2.0};
    auto loss = [&](bool with_grad) {
        Graph g;
        auto x = g.param(p);
        auto out = g.sum(g.mul(x, x));
        if (with_grad) g.backward(out);
        return g.scalar_value(out);
    };
    auto report = nn::grad_check(store, loss, 1e-5, 1e-8);
    CHECK(report.pass);
    CHECK(report.max_rel_err < 1e-8);
    // analytic gradient is [2,4]
    store.zero_grads();
    loss(true);
    CHECK(p.grad.v[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(p.grad.v[1] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("every registered op passes grad_check") {
    auto results = casumm_tests::run_op_grad_suite(2024, 1e-5, 1e-4);
    CHECK(results.size() >= 25);
    for (const auto& r : results) {
        INFO("op ", r.op, " max_rel_err=", r.max_rel_err);
        CHECK(r.pass);
    }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    ParameterStore store;
    Rng rng(7);
    store.add_uniform("w1", {4, 3}, 1.0, rng);
    store.add_uniform("w2", {2, 5}, 0.3, rng);
    auto& odd = store.add("odd", {3});
    odd.value.v = {1.0 / 3.0, -0.0, 1e-308};

    auto path = std::filesystem::temp_directory_path() / "casumm_ckpt_test.bin";
    nn::save_checkpoint(path.string(), store);

    ParameterStore loaded;
    loaded.add("w1", {4, 3});
    loaded.add("w2", {2, 5});
    loaded.add("odd", {3});
    nn::load_checkpoint(path.string(), loaded);
    for (auto* p : store.all()) {
        auto* q = loaded.find(p->name);
        REQUIRE(q != nullptr);
        REQUIRE(q->value.shape == p->value.shape);
        for (int i = 0; i < p->value.numel(); ++i) {
            CHECK(std::memcmp(&q->value.v[i], &p->value.v[i], sizeof(double)) == 0);
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint mismatch errors") {
    ParameterStore store;
    Rng rng(3);
    store.add_uniform("w", {2, 2}, 1.0, rng);
    auto path = std::filesystem::temp_directory_path() / "casumm_ckpt_mismatch.bin";
    nn::save_checkpoint(path.string(), store);

    ParameterStore other;
    other.add("different", {2, 2});
    CHECK_THROWS_AS(nn::load_checkpoint(path.string(), other), DataError);
    std::filesystem::remove(path);
}

TEST_CASE("adam reduces a simple loss deterministically") {
    auto run = [] {
        ParameterStore store;
        Rng rng(11);
        auto& w = store.add_uniform("w", {4}, 1.0, rng);
        nn::Adam opt(nn::AdamConfig{.lr = 0.05});
        double last = 0.0;
        for (int step = 0; step < 200; ++step) {
            Graph g;
            auto x = g.param(w);
            auto loss = g.sum(g.mul(x, x));
            g.backward(loss);
            last = g.scalar_value(loss);
            opt.step(store);
        }
        return std::make_pair(last, w.value.v);
    };
    auto [loss1, w1] = run();
    auto [loss2, w2] = run();
    CHECK(loss1 < 0.05);
    CHECK(loss1 == loss2);
    CHECK(w1 == w2);
}
