#include <doctest.h>

#include <cmath>
#include <limits>
#include <tuple>

#include "pfoa/common/error.hpp"
#include "pfoa/common/parallel.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/nn/init.hpp"
#include "pfoa/nn/ops.hpp"
#include "pfoa/nn/tensor.hpp"
#include "support/oracles.hpp"

using namespace pfoa;
using nn::Parameter;
using nn::Shape;
using nn::Tensor;

namespace {

Parameter random_param(const std::string& name, Shape shape, Rng& rng, double scale = 1.0) {
    std::vector<double> v(nn::shape_numel(shape));
    for (double& x : v) x = rng.normal(0.0, scale);
    return Parameter(name, std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("conv2d hand case: all-ones 3x3, no padding -> 9") {
    const Tensor in = Tensor::from_values({1, 1, 3, 3}, std::vector<double>(9, 1.0));
    const Tensor ker = Tensor::from_values({1, 1, 3, 3}, std::vector<double>(9, 1.0));
    const Tensor bias = Tensor::from_values({1}, {0.0});
    const Tensor out = nn::conv2d(in, ker, bias, 1, 0);
    CHECK(out.shape() == Shape{1, 1, 1, 1});
    CHECK(out.values()[0] == doctest::Approx(9.0).epsilon(1e-15));
}

TEST_CASE("conv2d hand case: all-ones with pad 1 counts kernel overlap") {
    const Tensor in = Tensor::from_values({1, 1, 3, 3}, std::vector<double>(9, 1.0));
    const Tensor ker = Tensor::from_values({1, 1, 3, 3}, std::vector<double>(9, 1.0));
    const Tensor bias = Tensor::from_values({1}, {0.0});
    const Tensor out = nn::conv2d(in, ker, bias, 1, 1);
    const std::vector<double> expected{4, 6, 4, 6, 9, 6, 4, 6, 4};
    REQUIRE(out.shape() == Shape{1, 1, 3, 3});
    for (std::size_t i = 0; i < 9; ++i)
        CHECK(out.values()[i] == doctest::Approx(expected[i]).epsilon(1e-15));
}

TEST_CASE("conv2d rejects mismatched shapes, naming both") {
    const Tensor in = Tensor::from_values({1, 2, 4, 4}, std::vector<double>(32, 0.0));
    const Tensor ker = Tensor::from_values({1, 3, 3, 3}, std::vector<double>(27, 0.0));
    const Tensor bias = Tensor::from_values({1}, {0.0});
    try {
        nn::conv2d(in, ker, bias, 1, 0);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[1x2x4x4]") != std::string::npos);
        CHECK(msg.find("[1x3x3x3]") != std::string::npos);
    }
}

TEST_CASE("conv2d gradient matches central differences (smooth path)") {
    Rng rng(1);
    Parameter in = random_param("in", {2, 3, 8, 8}, rng);
    Parameter ker = random_param("ker", {4, 3, 3, 3}, rng, 0.5);
    Parameter bias = random_param("bias", {4}, rng, 0.1);
    std::vector<Parameter*> params{&in, &ker, &bias};
    auto rebuild = [&] {
        return nn::sum(nn::conv2d(in.tensor, ker.tensor, bias.tensor, 1, 1));
    };
    const auto r = oracles::grad_check(rebuild, params, 1e-4, 1e-6, 11, 25);
    CHECK(r.ok);
    CHECK(r.checked > 0);
}

TEST_CASE("conv2d stride-2 gradient") {
    Rng rng(2);
    Parameter in = random_param("in", {1, 2, 6, 6}, rng);
    Parameter ker = random_param("ker", {3, 2, 3, 3}, rng, 0.5);
    Parameter bias = random_param("bias", {3}, rng, 0.1);
    std::vector<Parameter*> params{&in, &ker, &bias};
    auto rebuild = [&] {
        // sigmoid keeps the reduction nonlinear so every coordinate matters
        return nn::sum(nn::sigmoid(nn::conv2d(in.tensor, ker.tensor, bias.tensor, 2, 1)));
    };
    const auto r = oracles::grad_check(rebuild, params, 1e-4, 1e-6, 13, 30);
    CHECK(r.ok);
}

TEST_CASE("elementwise op values: sigmoid(0)=0.5, gap mean, relu clamp") {
    const Tensor x = Tensor::from_values({1, 1, 2, 2}, {1, 2, 3, 4});
    CHECK(nn::gap(x).values()[0] == doctest::Approx(2.5));
    const Tensor z = Tensor::from_values({3}, {0.0, -1.0, 2.0});
    const auto sig = nn::sigmoid(z).values();
    CHECK(sig[0] == doctest::Approx(0.5));
    const auto r = nn::relu(z).values();
    CHECK(r[1] == 0.0);
    CHECK(r[2] == 2.0);
}

TEST_CASE("maxpool2 requires even spatial dims and routes gradient to first-index argmax") {
    const Tensor odd = Tensor::from_values({1, 1, 3, 4}, std::vector<double>(12, 0.0));
    CHECK_THROWS_AS(nn::maxpool2(odd), ShapeError);

    // window with a tie: gradient must land on the first max in row-major order
    Parameter x("x", {1, 1, 2, 2}, {7.0, 7.0, 1.0, 0.0});
    x.tensor.zero_grad();
    const Tensor loss = nn::sum(nn::maxpool2(x.tensor));
    nn::backward(loss);
    CHECK(x.tensor.grad()[0] == 1.0);
    CHECK(x.tensor.grad()[1] == 0.0);
}

TEST_CASE("maxpool2 gradient matches central differences on distinct values") {
    Rng rng(3);
    Parameter in = random_param("in", {2, 2, 6, 6}, rng);
    std::vector<Parameter*> params{&in};
    auto rebuild = [&] { return nn::sum(nn::sigmoid(nn::maxpool2(in.tensor))); };
    const auto r = oracles::grad_check(rebuild, params, 1e-4, 1e-3, 17, 40);
    CHECK(r.ok);
}

TEST_CASE("gap / linear / concat / broadcast / add / mul gradients") {
    Rng rng(4);
    Parameter a = random_param("a", {2, 3, 4, 4}, rng);
    Parameter w = random_param("w", {5, 3}, rng, 0.5);
    Parameter b = random_param("b", {5}, rng, 0.1);
    Parameter v = random_param("v", {2, 2}, rng);
    Parameter map = random_param("map", {2, 1, 4, 4}, rng);
    std::vector<Parameter*> params{&a, &w, &b, &v, &map};
    auto rebuild = [&] {
        const Tensor attended = nn::mul(nn::sigmoid(map.tensor), a.tensor);  // broadcast path
        const Tensor pooled = nn::gap(attended);                             // 2x3
        const Tensor lin = nn::linear(pooled, w.tensor, b.tensor);           // 2x5
        const Tensor cat = nn::concat_features({lin, v.tensor});             // 2x7
        const Tensor plane = nn::broadcast_spatial(cat, 3, 2);               // 2x7x3x2
        const Tensor doubled = nn::add(plane, plane);
        return nn::sum(nn::mul(doubled, doubled));  // elementwise path
    };
    const auto r = oracles::grad_check(rebuild, params, 1e-4, 1e-6, 19, 20);
    CHECK(r.ok);
}

TEST_CASE("broadcast_spatial of [1,2] makes constant planes") {
    const Tensor v = Tensor::from_values({1, 2}, {1.0, 2.0});
    const Tensor out = nn::broadcast_spatial(v, 2, 2);
    REQUIRE(out.shape() == Shape{1, 2, 2, 2});
    for (int i = 0; i < 4; ++i) CHECK(out.values()[static_cast<std::size_t>(i)] == 1.0);
    for (int i = 4; i < 8; ++i) CHECK(out.values()[static_cast<std::size_t>(i)] == 2.0);
}

TEST_CASE("concat backward splits gradient by original widths") {
    Rng rng(5);
    Parameter a = random_param("a", {3, 2}, rng);
    Parameter b = random_param("b", {3, 4}, rng);
    std::vector<Parameter*> params{&a, &b};
    auto rebuild = [&] {
        const Tensor cat = nn::concat_features({a.tensor, b.tensor});
        return nn::sum(nn::mul(cat, cat));
    };
    const auto r = oracles::grad_check(rebuild, params, 1e-4, 1e-6, 23, 40);
    CHECK(r.ok);
}

TEST_CASE("focal loss with gamma=0, alpha=1 equals binary cross-entropy") {
    Rng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(0, 15));
        std::vector<double> logits;
        std::vector<int> labels;
        double bce = 0.0;
        for (int i = 0; i < n; ++i) {
            logits.push_back(rng.normal(0.0, 3.0));
            labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
            const double p = 1.0 / (1.0 + std::exp(-logits.back()));
            bce += labels.back() ? -std::log(p) : -std::log(1.0 - p);
        }
        bce /= n;
        const Tensor z = Tensor::from_values({n}, logits);
        const double fl = nn::focal_loss(z, labels, 0.0, 1.0).item();
        CHECK(std::fabs(fl - bce) < 1e-12);
    }
}

TEST_CASE("focal loss scalar case: y=1, p=0.9, gamma=2 -> 1.0536e-3") {
    const double z = std::log(0.9 / 0.1);
    const Tensor logits = Tensor::from_values({1}, {z});
    const double loss = nn::focal_loss(logits, {1}, 2.0, 1.0).item();
    CHECK(std::fabs(loss - 1.05360515657826e-3) < 1e-8);
}

TEST_CASE("focal loss vanishes for confidently correct predictions") {
    const Tensor logits = Tensor::from_values({1}, {30.0});
    CHECK(nn::focal_loss(logits, {1}, 2.0, 1.0).item() < 1e-12);
    const Tensor neg = Tensor::from_values({1}, {-500.0});  // stability at extremes
    const double l = nn::focal_loss(neg, {0}, 2.0, 1.0).item();
    CHECK(std::isfinite(l));
    CHECK(l < 1e-12);
}

TEST_CASE("focal loss rejects labels outside {0,1}") {
    const Tensor logits = Tensor::from_values({2}, {0.1, 0.2});
    CHECK_THROWS_AS(nn::focal_loss(logits, {1, 2}, 2.0, 1.0), ValidationError);
}

TEST_CASE("focal loss gradient matches central differences (incl. alpha weighting)") {
    Rng rng(7);
    for (double gamma : {0.0, 2.0}) {
        for (double alpha : {1.0, 0.7}) {
            Parameter z = random_param("z", {6}, rng, 2.0);
            std::vector<int> labels;
            for (int i = 0; i < 6; ++i) labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
            std::vector<Parameter*> params{&z};
            auto rebuild = [&] { return nn::focal_loss(z.tensor, labels, gamma, alpha); };
            const auto r = oracles::grad_check(rebuild, params, 1e-4, 1e-6, 29, 6);
            CHECK(r.ok);
        }
    }
}

TEST_CASE("he_init: seeded determinism and moment targets") {
    const auto v1 = nn::he_init({100000}, 200, 42);
    const auto v2 = nn::he_init({100000}, 200, 42);
    CHECK(v1 == v2);
    const auto v3 = nn::he_init({100000}, 200, 43);
    CHECK(v1 != v3);

    double mean = 0.0;
    for (double x : v1) mean += x;
    mean /= static_cast<double>(v1.size());
    double var = 0.0;
    for (double x : v1) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v1.size());
    CHECK(std::fabs(var - 0.01) < 0.0005);                     // 2/200, within 5%
    CHECK(std::fabs(mean) < 3.0 * 0.1 / std::sqrt(100000.0));  // 3 sigma / sqrt(n)
}

TEST_CASE("backward of sum gives ones; double backward is an error") {
    Parameter x("x", {4}, {1, 2, 3, 4});
    x.tensor.zero_grad();
    const Tensor loss = nn::sum(x.tensor);
    nn::backward(loss);
    for (double g : x.tensor.grad()) CHECK(g == 1.0);
    CHECK_THROWS_AS(nn::backward(loss), Error);
}

TEST_CASE("backward requires a scalar loss") {
    Parameter x("x", {4}, {1, 2, 3, 4});
    const Tensor y = nn::relu(x.tensor);
    CHECK_THROWS_AS(nn::backward(y), ShapeError);
}

TEST_CASE("disconnected parameter keeps a zero gradient") {
    Parameter used("used", {3}, {1, 2, 3});
    Parameter untouched("untouched", {3}, {4, 5, 6});
    used.tensor.zero_grad();
    untouched.tensor.zero_grad();
    nn::backward(nn::sum(used.tensor));
    for (double g : untouched.tensor.grad()) CHECK(g == 0.0);
    for (double g : used.tensor.grad()) CHECK(g == 1.0);
}

TEST_CASE("sgd momentum: single step, two-step recursion, zero-grad no-op") {
    Parameter p("p", {1}, {0.0});
    std::vector<Parameter*> params{&p};

    p.tensor.zero_grad();
    p.tensor.node()->grad[0] = 1.0;
    nn::sgd_momentum_step(params, 0.1, 0.0);
    CHECK(p.tensor.values()[0] == doctest::Approx(-0.1).epsilon(1e-15));

    Parameter q("q", {1}, {0.0});
    std::vector<Parameter*> qs{&q};
    for (int step = 0; step < 2; ++step) {
        q.tensor.zero_grad();
        q.tensor.node()->grad[0] = 1.0;
        nn::sgd_momentum_step(qs, 1.0, 0.9);
    }
    CHECK(q.tensor.values()[0] == doctest::Approx(-2.9).epsilon(1e-12));

    Parameter r("r", {1}, {1.5});
    std::vector<Parameter*> rs{&r};
    r.tensor.zero_grad();  // grad stays zero
    nn::sgd_momentum_step(rs, 0.5, 0.9);
    CHECK(r.tensor.values()[0] == 1.5);
    CHECK(r.momentum[0] == 0.0);

    Parameter s("s", {1}, {0.0});
    std::vector<Parameter*> ss{&s};
    s.tensor.zero_grad();
    s.tensor.node()->grad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(nn::sgd_momentum_step(ss, 0.1, 0.9), Error);
}

TEST_CASE("conv2d forward and backward are invariant to the worker count") {
    Rng rng(8);
    Parameter in = random_param("in", {8, 3, 10, 10}, rng);
    Parameter ker = random_param("ker", {5, 3, 3, 3}, rng, 0.5);
    Parameter bias = random_param("bias", {5}, rng, 0.1);

    auto run = [&](int threads) {
        set_thread_count(threads);
        in.tensor.zero_grad();
        ker.tensor.zero_grad();
        bias.tensor.zero_grad();
        const Tensor loss =
            nn::sum(nn::sigmoid(nn::conv2d(in.tensor, ker.tensor, bias.tensor, 1, 1)));
        nn::backward(loss);
        return std::tuple{loss.item(), ker.tensor.grad(), in.tensor.grad()};
    };
    const auto [l1, kg1, ig1] = run(1);
    const auto [l4, kg4, ig4] = run(4);
    set_thread_count(0);  // restore default resolution
    CHECK(l1 == l4);
    CHECK(kg1 == kg4);  // bit-identical reductions
    CHECK(ig1 == ig4);
}

TEST_CASE("operators do not mutate their inputs") {
    const std::vector<double> original{1.0, -2.0, 3.0, -4.0};
    const Tensor x = Tensor::from_values({1, 1, 2, 2}, original);
    (void)nn::relu(x);
    (void)nn::sigmoid(x);
    (void)nn::maxpool2(x);
    (void)nn::gap(x);
    (void)nn::sum(x);
    CHECK(x.values() == original);
}

TEST_CASE("debug checks flag non-finite operator outputs") {
    nn::set_debug_checks(true);
    const Tensor x = Tensor::from_values({1}, {1e308});
    CHECK_THROWS_AS((void)nn::add(x, x), Error);
    nn::set_debug_checks(false);
    CHECK_NOTHROW((void)nn::add(x, x));
}
