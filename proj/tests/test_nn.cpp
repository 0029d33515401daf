#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oclbcp/nn_ops.hpp"
#include "oclbcp/param_store.hpp"
#include "oclbcp/ref/reference.hpp"
#include "oclbcp/rng.hpp"
#include "oclbcp/tensor.hpp"

using oclbcp::Rng;
using oclbcp::nn::Tensor;
namespace nn = oclbcp::nn;
namespace ref = oclbcp::ref;

namespace {

template <typename T>
void fill_uniform(Tensor<T>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (auto& v : t.v) v = static_cast<T>(rng.uniform(lo, hi));
}

template <typename T>
std::vector<T> random_values(size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
    return v;
}

// Weighted-sum scalarization of a tensor output so every element contributes
// to one differentiable loss.
double weighted_sum(const std::vector<double>& y, const std::vector<double>& r) {
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
    return s;
}

void check_grad(double analytic, double numeric, double rel_tol = 1e-4) {
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    CHECK(std::abs(analytic - numeric) / denom < rel_tol);
}

// Central finite difference of f with respect to *x.
double central_diff(const std::function<double()>& f, double* x, double h = 1e-5) {
    double orig = *x;
    *x = orig + h;
    double fp = f();
    *x = orig - h;
    double fm = f();
    *x = orig;
    return (fp - fm) / (2.0 * h);
}

}  // namespace

TEST_CASE("tensor plumbing validates shapes and finiteness") {
    Tensor<double> t({2, 3});
    CHECK(t.v.size() == 6);
    CHECK(!t.has_grad());
    t.alloc_grad();
    CHECK(t.has_grad());
    t.grad()[0] = 7.0;
    t.zero_grad();
    CHECK(t.grad()[0] == 0.0);

    CHECK_THROWS_AS(Tensor<double>({2, -1}), std::invalid_argument);

    Tensor<double> nan_t({2});
    nan_t.v[1] = std::nan("");
    CHECK_THROWS_AS(nn::ensure_finite(nan_t, "t"), std::runtime_error);
    Tensor<double> inf_t({2});
    inf_t.v[0] = HUGE_VAL;
    CHECK_THROWS_AS(nn::ensure_finite(inf_t, "t"), std::runtime_error);
}

TEST_CASE("blocked matrix products match the naive loops") {
    Rng rng(2024);
    const int64_t shapes[][3] = {{1, 1, 1},   {4, 32, 16},  {5, 33, 7},
                                 {67, 129, 61}, {128, 64, 300}, {3, 700, 2}};
    for (auto [m, n, k] : shapes) {
        auto a = random_values<double>(static_cast<size_t>(m * k), rng);
        auto b = random_values<double>(static_cast<size_t>(k * n), rng);
        std::vector<double> c0(static_cast<size_t>(m * n), 0.5);
        std::vector<double> c1 = c0;

        nn::gemm_nn<double>(m, n, k, a.data(), k, b.data(), n, c0.data(), n);
        ref::gemm_nn_naive<double>(m, n, k, a.data(), k, b.data(), n, c1.data(), n);
        for (size_t i = 0; i < c0.size(); ++i)
            CHECK(c0[i] == doctest::Approx(c1[i]).epsilon(1e-12));

        auto bt = random_values<double>(static_cast<size_t>(n * k), rng);
        nn::gemm_nt<double>(m, n, k, a.data(), k, bt.data(), k, c0.data(), n);
        ref::gemm_nt_naive<double>(m, n, k, a.data(), k, bt.data(), k, c1.data(), n);
        for (size_t i = 0; i < c0.size(); ++i)
            CHECK(c0[i] == doctest::Approx(c1[i]).epsilon(1e-12));

        auto at = random_values<double>(static_cast<size_t>(k * m), rng);
        nn::gemm_tn<double>(m, n, k, at.data(), m, b.data(), n, c0.data(), n);
        ref::gemm_tn_naive<double>(m, n, k, at.data(), m, b.data(), n, c1.data(), n);
        for (size_t i = 0; i < c0.size(); ++i)
            CHECK(c0[i] == doctest::Approx(c1[i]).epsilon(1e-12));
    }
}

TEST_CASE("matrix product accumulate flag adds onto the destination") {
    Rng rng(3);
    int64_t m = 6, n = 9, k = 5;
    auto a = random_values<float>(static_cast<size_t>(m * k), rng);
    auto b = random_values<float>(static_cast<size_t>(k * n), rng);
    std::vector<float> base = random_values<float>(static_cast<size_t>(m * n), rng);
    std::vector<float> fresh(static_cast<size_t>(m * n), 0.0f);
    std::vector<float> acc = base;
    nn::gemm_nn<float>(m, n, k, a.data(), k, b.data(), n, fresh.data(), n);
    nn::gemm_nn<float>(m, n, k, a.data(), k, b.data(), n, acc.data(), n, true);
    for (size_t i = 0; i < acc.size(); ++i)
        CHECK(acc[i] == doctest::Approx(base[i] + fresh[i]).epsilon(1e-5));
}

TEST_CASE("matrix products are bitwise repeatable") {
    Rng rng(4);
    int64_t m = 37, n = 65, k = 300;
    auto a = random_values<float>(static_cast<size_t>(m * k), rng);
    auto b = random_values<float>(static_cast<size_t>(k * n), rng);
    std::vector<float> c0(static_cast<size_t>(m * n), 0.0f), c1 = c0;
    nn::gemm_nn<float>(m, n, k, a.data(), k, b.data(), n, c0.data(), n);
    nn::gemm_nn<float>(m, n, k, a.data(), k, b.data(), n, c1.data(), n);
    CHECK(c0 == c1);
}

TEST_CASE("convolution: identity tap reproduces the input") {
    Rng rng(5);
    Tensor<double> x({1, 1, 4, 4});
    fill_uniform(x, rng);
    Tensor<double> w({1, 1, 2, 2});
    w.v = {1, 0, 0, 0};
    Tensor<double> b({1});
    Tensor<double> y = nn::conv2d_forward(x, w, b);
    REQUIRE(y.shape == x.shape);
    for (size_t i = 0; i < x.v.size(); ++i) CHECK(y.v[i] == x.v[i]);
}

TEST_CASE("convolution: zero input broadcasts the bias") {
    Tensor<double> x({2, 3, 4, 4});
    Tensor<double> w({5, 3, 2, 2});
    Tensor<double> b({5});
    b.v = {0.1, -0.2, 0.3, -0.4, 0.5};
    Tensor<double> y = nn::conv2d_forward(x, w, b);
    for (int64_t i = 0; i < 2; ++i)
        for (int64_t oc = 0; oc < 5; ++oc)
            for (int64_t p = 0; p < 16; ++p) CHECK(y.v[(i * 5 + oc) * 16 + p] == b.v[oc]);
}

TEST_CASE("convolution pads with zeros on the right and bottom only") {
    Tensor<double> x({1, 1, 2, 2});
    x.v = {1, 2, 3, 4};
    Tensor<double> b({1});

    Tensor<double> east({1, 1, 2, 2});
    east.v = {0, 1, 0, 0};
    Tensor<double> y = nn::conv2d_forward(x, east, b);
    CHECK(y.v == std::vector<double>({2, 0, 4, 0}));

    Tensor<double> south({1, 1, 2, 2});
    south.v = {0, 0, 1, 0};
    y = nn::conv2d_forward(x, south, b);
    CHECK(y.v == std::vector<double>({3, 4, 0, 0}));
}

TEST_CASE("convolution matches the direct-loop oracle") {
    Rng rng(6);
    Tensor<double> x({2, 3, 5, 7});
    Tensor<double> w({4, 3, 2, 2});
    Tensor<double> b({4});
    fill_uniform(x, rng);
    fill_uniform(w, rng);
    fill_uniform(b, rng);
    Tensor<double> fast = nn::conv2d_forward(x, w, b);
    Tensor<double> slow = ref::conv2d_forward_naive(x, w, b);
    REQUIRE(fast.shape == slow.shape);
    for (size_t i = 0; i < fast.v.size(); ++i)
        CHECK(fast.v[i] == doctest::Approx(slow.v[i]).epsilon(1e-12));
}

TEST_CASE("convolution rejects shape mismatches and non-finite input") {
    Tensor<double> x({1, 2, 4, 4});
    Tensor<double> w({3, 5, 2, 2});
    Tensor<double> b({3});
    CHECK_THROWS_AS(nn::conv2d_forward(x, w, b), std::invalid_argument);
    Tensor<double> w3({3, 2, 3, 3});
    CHECK_THROWS_AS(nn::conv2d_forward(x, w3, b), std::invalid_argument);
    Tensor<double> wok({3, 2, 2, 2});
    Tensor<double> bbad({4});
    CHECK_THROWS_AS(nn::conv2d_forward(x, wok, bbad), std::invalid_argument);
    x.v[0] = std::nan("");
    CHECK_THROWS_AS(nn::conv2d_forward(x, wok, b), std::runtime_error);
}

TEST_CASE("convolution gradients match finite differences") {
    Rng rng(7);
    Tensor<double> x({2, 2, 3, 3});
    Tensor<double> w({3, 2, 2, 2});
    Tensor<double> b({3});
    fill_uniform(x, rng);
    fill_uniform(w, rng);
    fill_uniform(b, rng);
    std::vector<double> r = random_values<double>(2 * 3 * 9, rng);

    auto loss = [&]() {
        Tensor<double> y = nn::conv2d_forward(x, w, b);
        return weighted_sum(y.v, r);
    };

    Tensor<double> dy({2, 3, 3, 3});
    dy.v = r;
    Tensor<double> dx({2, 2, 3, 3});
    std::vector<double> dw(w.v.size(), 0.0), db(b.v.size(), 0.0);
    nn::conv2d_backward(x, w, dy, &dx, dw, db);

    for (size_t i = 0; i < x.v.size(); ++i) check_grad(dx.v[i], central_diff(loss, &x.v[i]));
    for (size_t i = 0; i < w.v.size(); ++i) check_grad(dw[i], central_diff(loss, &w.v[i]));
    for (size_t i = 0; i < b.v.size(); ++i) check_grad(db[i], central_diff(loss, &b.v[i]));
}

TEST_CASE("max pooling picks window maxima and the first tie") {
    Tensor<double> x({1, 1, 2, 2});
    x.v = {1, 2, 3, 4};
    Tensor<double> y;
    Tensor<int64_t> idx;
    nn::maxpool2_forward(x, y, idx);
    REQUIRE(y.shape == std::vector<int64_t>({1, 1, 1, 1}));
    CHECK(y.v[0] == 4.0);
    CHECK(idx.v[0] == 3);

    Tensor<double> flat({1, 1, 2, 2});
    flat.v = {5, 5, 5, 5};
    nn::maxpool2_forward(flat, y, idx);
    CHECK(y.v[0] == 5.0);
    CHECK(idx.v[0] == 0);

    Tensor<double> c({2, 3, 4, 4});
    std::fill(c.v.begin(), c.v.end(), 0.25);
    nn::maxpool2_forward(c, y, idx);
    REQUIRE(y.shape == std::vector<int64_t>({2, 3, 2, 2}));
    for (double v : y.v) CHECK(v == 0.25);

    Tensor<double> odd({1, 1, 3, 4});
    CHECK_THROWS_AS(nn::maxpool2_forward(odd, y, idx), std::invalid_argument);
}

TEST_CASE("max pooling backward routes gradient to the argmax") {
    Tensor<double> x({1, 2, 4, 4});
    Rng rng(8);
    fill_uniform(x, rng);
    Tensor<double> y;
    Tensor<int64_t> idx;
    nn::maxpool2_forward(x, y, idx);
    Tensor<double> dy(y.shape);
    fill_uniform(dy, rng);
    Tensor<double> dx = nn::maxpool2_backward(idx, dy, x.shape);
    REQUIRE(dx.shape == x.shape);
    double in_sum = 0.0, out_sum = 0.0;
    for (double v : dy.v) in_sum += v;
    int nonzero = 0;
    for (double v : dx.v) {
        out_sum += v;
        if (v != 0.0) ++nonzero;
    }
    CHECK(out_sum == doctest::Approx(in_sum).epsilon(1e-12));
    CHECK(nonzero == static_cast<int>(dy.v.size()));
    for (size_t i = 0; i < dy.v.size(); ++i) CHECK(dx.v[static_cast<size_t>(idx.v[i])] == dy.v[i]);
}

TEST_CASE("max pooling gradient matches finite differences") {
    Rng rng(9);
    Tensor<double> x({2, 2, 4, 4});
    // Keep window values separated so the finite-difference step cannot flip
    // an argmax.
    for (size_t i = 0; i < x.v.size(); ++i)
        x.v[i] = rng.uniform(-1.0, 1.0) + 0.01 * static_cast<double>(i % 7);
    std::vector<double> r = random_values<double>(2 * 2 * 4, rng);
    auto loss = [&]() {
        Tensor<double> y;
        Tensor<int64_t> idx;
        nn::maxpool2_forward(x, y, idx);
        return weighted_sum(y.v, r);
    };
    Tensor<double> y;
    Tensor<int64_t> idx;
    nn::maxpool2_forward(x, y, idx);
    Tensor<double> dy(y.shape);
    dy.v = r;
    Tensor<double> dx = nn::maxpool2_backward(idx, dy, x.shape);
    for (size_t i = 0; i < x.v.size(); ++i) check_grad(dx.v[i], central_diff(loss, &x.v[i]));
}

TEST_CASE("relu clamps and gates") {
    Tensor<double> x({5});
    x.v = {-2.0, -0.0, 0.0, 0.5, 3.0};
    Tensor<double> y = nn::relu_forward(x);
    CHECK(y.v == std::vector<double>({0.0, 0.0, 0.0, 0.5, 3.0}));

    Tensor<double> dy({5});
    dy.v = {1, 1, 1, 1, 1};
    Tensor<double> dx = nn::relu_backward(x, dy);
    CHECK(dx.v == std::vector<double>({0.0, 0.0, 0.0, 1.0, 1.0}));

    Rng rng(10);
    Tensor<double> xr({40});
    for (auto& v : xr.v) {
        v = rng.uniform(-1.0, 1.0);
        if (std::abs(v) < 0.05) v += 0.1;
    }
    std::vector<double> r = random_values<double>(40, rng);
    auto loss = [&]() {
        Tensor<double> yr = nn::relu_forward(xr);
        return weighted_sum(yr.v, r);
    };
    Tensor<double> dyr({40});
    dyr.v = r;
    Tensor<double> dxr = nn::relu_backward(xr, dyr);
    for (size_t i = 0; i < xr.v.size(); ++i) check_grad(dxr.v[i], central_diff(loss, &xr.v[i]));
}

TEST_CASE("fully connected layer computes affine maps") {
    Tensor<double> x({2, 3});
    x.v = {1, 2, 3, 4, 5, 6};
    Tensor<double> w({3, 3});
    w.v = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    Tensor<double> b({3});
    Tensor<double> y = nn::fc_forward(x, w, b);
    CHECK(y.v == x.v);

    Tensor<double> wz({4, 3});
    Tensor<double> bz({4});
    bz.v = {1, 2, 3, 4};
    y = nn::fc_forward(x, wz, bz);
    CHECK(y.v == std::vector<double>({1, 2, 3, 4, 1, 2, 3, 4}));

    Tensor<double> wbad({4, 5});
    CHECK_THROWS_AS(nn::fc_forward(x, wbad, bz), std::invalid_argument);
}

TEST_CASE("fully connected gradients match finite differences") {
    Rng rng(11);
    Tensor<double> x({3, 7});
    Tensor<double> w({4, 7});
    Tensor<double> b({4});
    fill_uniform(x, rng);
    fill_uniform(w, rng);
    fill_uniform(b, rng);
    std::vector<double> r = random_values<double>(12, rng);
    auto loss = [&]() {
        Tensor<double> y = nn::fc_forward(x, w, b);
        return weighted_sum(y.v, r);
    };
    Tensor<double> dy({3, 4});
    dy.v = r;
    Tensor<double> dx;
    std::vector<double> dw(w.v.size(), 0.0), db(b.v.size(), 0.0);
    nn::fc_backward(x, w, dy, &dx, dw, db);
    for (size_t i = 0; i < x.v.size(); ++i) check_grad(dx.v[i], central_diff(loss, &x.v[i]));
    for (size_t i = 0; i < w.v.size(); ++i) check_grad(dw[i], central_diff(loss, &w.v[i]));
    for (size_t i = 0; i < b.v.size(); ++i) check_grad(db[i], central_diff(loss, &b.v[i]));
}

TEST_CASE("feature fusion merges by max and by sum") {
    Rng rng(12);
    Tensor<double> f1({3, 8});
    Tensor<double> f2({3, 8});
    fill_uniform(f1, rng);
    for (size_t i = 0; i < f2.v.size(); ++i) {
        double delta = rng.uniform(0.01, 0.8);
        f2.v[i] = f1.v[i] + (rng.next_double() < 0.5 ? delta : -delta);
    }

    Tensor<double> z;
    Tensor<uint8_t> takes_first;
    nn::fuse_max_forward(f1, f2, z, takes_first);
    for (size_t i = 0; i < z.v.size(); ++i) CHECK(z.v[i] == std::max(f1.v[i], f2.v[i]));

    Tensor<double> zs = nn::fuse_sum_forward(f1, f2);
    for (size_t i = 0; i < zs.v.size(); ++i) CHECK(zs.v[i] == f1.v[i] + f2.v[i]);

    // Ties route to the first stream.
    Tensor<double> same = f1;
    Tensor<double> ztie;
    Tensor<uint8_t> m;
    nn::fuse_max_forward(f1, same, ztie, m);
    for (uint8_t v : m.v) CHECK(v == 1);

    std::vector<double> r = random_values<double>(f1.v.size(), rng);
    auto loss_max = [&]() {
        Tensor<double> zz;
        Tensor<uint8_t> mm;
        nn::fuse_max_forward(f1, f2, zz, mm);
        return weighted_sum(zz.v, r);
    };
    Tensor<double> dz(z.shape);
    dz.v = r;
    Tensor<double> df1(f1.shape), df2(f2.shape);
    nn::fuse_max_backward(takes_first, dz, df1, df2);
    for (size_t i = 0; i < f1.v.size(); ++i) {
        check_grad(df1.v[i], central_diff(loss_max, &f1.v[i]));
        check_grad(df2.v[i], central_diff(loss_max, &f2.v[i]));
    }

    auto loss_sum = [&]() {
        Tensor<double> zz = nn::fuse_sum_forward(f1, f2);
        return weighted_sum(zz.v, r);
    };
    for (size_t i = 0; i < f1.v.size(); ++i) {
        check_grad(r[i], central_diff(loss_sum, &f1.v[i]));
        check_grad(r[i], central_diff(loss_sum, &f2.v[i]));
    }

    Tensor<double> bad({3, 9});
    Tensor<double> zz;
    Tensor<uint8_t> mm;
    CHECK_THROWS_AS(nn::fuse_max_forward(f1, bad, zz, mm), std::invalid_argument);
    CHECK_THROWS_AS(nn::fuse_sum_forward(f1, bad), std::invalid_argument);
}

TEST_CASE("softmax rows are distributions") {
    Rng rng(13);
    Tensor<double> logits({6, 11});
    fill_uniform(logits, rng, -30.0, 30.0);
    Tensor<double> p = nn::softmax(logits);
    for (int64_t i = 0; i < 6; ++i) {
        double s = 0.0;
        for (int64_t j = 0; j < 11; ++j) {
            double v = p.v[static_cast<size_t>(i) * 11 + j];
            CHECK(v >= 0.0);
            s += v;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }

    Tensor<double> two({1, 2});
    two.v = {3.0, 3.0};
    Tensor<double> q = nn::softmax(two);
    CHECK(q.v[0] == doctest::Approx(0.5).epsilon(1e-15));

    // Shift invariance, exercised with an extreme offset.
    Tensor<double> shifted({1, 3});
    shifted.v = {1000.0, 1001.0, 1002.0};
    Tensor<double> base({1, 3});
    base.v = {0.0, 1.0, 2.0};
    Tensor<double> ps = nn::softmax(shifted);
    Tensor<double> pb = nn::softmax(base);
    for (int j = 0; j < 3; ++j) CHECK(ps.v[j] == doctest::Approx(pb.v[j]).epsilon(1e-12));
}

TEST_CASE("cross entropy agrees with closed forms and rejects bad labels") {
    Tensor<double> logits({1, 2});
    Tensor<double> onehot({1, 2});
    onehot.v = {1, 0};
    auto r = nn::softmax_xent(logits, onehot);
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Tensor<double> uniform({4, 10});
    Tensor<double> labels({4, 10});
    for (int i = 0; i < 4; ++i) labels.v[static_cast<size_t>(i) * 10 + i] = 1.0;
    auto ru = nn::softmax_xent(uniform, labels);
    CHECK(ru.loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));

    Tensor<double> bad({1, 3});
    CHECK_THROWS_AS(nn::softmax_xent(logits, bad), std::invalid_argument);
    Tensor<double> zeros({1, 2});
    CHECK_THROWS_AS(nn::softmax_xent(logits, zeros), std::invalid_argument);
    Tensor<double> twice({1, 2});
    twice.v = {1, 1};
    CHECK_THROWS_AS(nn::softmax_xent(logits, twice), std::invalid_argument);
    Tensor<double> frac({1, 2});
    frac.v = {0.5, 0.5};
    CHECK_THROWS_AS(nn::softmax_xent(logits, frac), std::invalid_argument);
    Tensor<double> infl({1, 2});
    infl.v = {HUGE_VAL, 0.0};
    Tensor<double> ok({1, 2});
    ok.v = {1, 0};
    CHECK_THROWS_AS(nn::softmax_xent(infl, ok), std::runtime_error);
}

TEST_CASE("cross entropy gradient matches finite differences") {
    Rng rng(14);
    Tensor<double> logits({5, 7});
    fill_uniform(logits, rng, -2.0, 2.0);
    Tensor<double> onehot({5, 7});
    for (int i = 0; i < 5; ++i)
        onehot.v[static_cast<size_t>(i) * 7 + rng.next_below(7)] = 1.0;

    auto loss = [&]() { return nn::softmax_xent(logits, onehot).loss; };
    auto res = nn::softmax_xent(logits, onehot);
    for (size_t i = 0; i < logits.v.size(); ++i)
        check_grad(res.dlogits.v[i], central_diff(loss, &logits.v[i], 1e-6));
}

TEST_CASE("adam first step has the closed form") {
    nn::ParamStore<double> store;
    Tensor<double>& p = store.create("w", {3});
    p.v = {1.0, -2.0, 0.5};
    std::vector<double> g = {2.0, -0.5, 0.0};
    for (int i = 0; i < 3; ++i) p.grad()[i] = g[i];

    nn::OptimizerConfig cfg;
    cfg.weight_decay = 0.0;
    double lr = 1e-3;
    adam_step(store, cfg, 0);

    for (int i = 0; i < 3; ++i) {
        double expect = (i == 2) ? 0.5 : (g[i] > 0 ? 1.0 : -2.0) - lr * g[i] / (std::abs(g[i]) + cfg.epsilon);
        CHECK(p.v[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(store.adam("w").step == 1);
}

TEST_CASE("adam applies weight decay through the gradient") {
    nn::ParamStore<double> store;
    Tensor<double>& p = store.create("w", {1});
    p.v = {4.0};
    p.grad()[0] = 0.0;
    nn::OptimizerConfig cfg;
    cfg.weight_decay = 0.5;
    adam_step(store, cfg, 0);
    double geff = 0.5 * 4.0;
    double expect = 4.0 - 1e-3 * geff / (std::abs(geff) + cfg.epsilon);
    CHECK(p.v[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("adam throws when a gradient buffer is missing") {
    nn::ParamStore<double> store;
    Tensor<double>& p = store.create("w", {2});
    p.g.clear();
    nn::OptimizerConfig cfg;
    CHECK_THROWS_AS(adam_step(store, cfg, 0), std::runtime_error);
}

TEST_CASE("parameter registry keeps insertion order and uniqueness") {
    nn::ParamStore<float> store;
    store.create("b", {2});
    store.create("a", {3});
    store.create("m", {1});
    CHECK(store.names() == std::vector<std::string>({"b", "a", "m"}));
    CHECK(store.total_values() == 6);
    CHECK_THROWS_AS(store.create("a", {3}), std::invalid_argument);
    CHECK_THROWS_AS(store.get("zz"), std::invalid_argument);
    CHECK(store.has("m"));

    store.get("a").grad()[0] = 5.0f;
    store.zero_grads();
    CHECK(store.get("a").grad()[0] == 0.0f);
}

TEST_CASE("learning rate schedule steps by exact decades and clamps") {
    nn::OptimizerConfig cfg;
    for (int e = 0; e <= 9; ++e) CHECK(nn::learning_rate_for_epoch(cfg, e) == 1e-3);
    for (int e = 10; e <= 19; ++e) CHECK(nn::learning_rate_for_epoch(cfg, e) == 1e-4);
    for (int e = 20; e <= 29; ++e) CHECK(nn::learning_rate_for_epoch(cfg, e) == 1e-5);
    for (int e : {30, 47, 100, 1000}) CHECK(nn::learning_rate_for_epoch(cfg, e) == 1e-5);
    CHECK_THROWS_AS(nn::learning_rate_for_epoch(cfg, -1), std::invalid_argument);
}

TEST_CASE("checkpoints round trip bitwise with and without optimizer state") {
    Rng rng(15);
    nn::ParamStore<float> store;
    fill_uniform(store.create("conv1.w", {4, 3, 2, 2}), rng);
    fill_uniform(store.create("conv1.b", {4}), rng);
    fill_uniform(store.create("fc.w", {10, 16}), rng);
    auto& st = store.adam("conv1.w");
    for (auto& v : st.m) v = static_cast<float>(rng.next_double());
    for (auto& v : st.v) v = static_cast<float>(rng.next_double());
    st.step = 42;

    save_checkpoint(store, "ckpt_plain.bin", false);
    nn::ParamStore<float> plain;
    CHECK(!load_checkpoint(plain, "ckpt_plain.bin"));
    CHECK(plain.names() == store.names());
    for (const auto& name : store.names()) CHECK(plain.get(name).v == store.get(name).v);
    CHECK(plain.adam("conv1.w").step == 0);

    save_checkpoint(store, "ckpt_adam.bin", true);
    nn::ParamStore<float> full;
    CHECK(load_checkpoint(full, "ckpt_adam.bin"));
    CHECK(full.adam("conv1.w").m == st.m);
    CHECK(full.adam("conv1.w").v == st.v);
    CHECK(full.adam("conv1.w").step == 42);

    // Loading into an existing store verifies shapes.
    nn::ParamStore<float> clash;
    clash.create("conv1.w", {4, 3, 2, 2});
    clash.create("conv1.b", {5});
    CHECK_THROWS_AS(load_checkpoint(clash, "ckpt_plain.bin"), std::runtime_error);

    {
        std::ofstream bad("ckpt_bad.bin", std::ios::binary);
        bad << "XXXX1234";
    }
    CHECK_THROWS_AS(load_checkpoint(plain, "ckpt_bad.bin"), std::runtime_error);
    CHECK_THROWS_AS(load_checkpoint(plain, "ckpt_missing.bin"), std::runtime_error);

    std::remove("ckpt_plain.bin");
    std::remove("ckpt_adam.bin");
    std::remove("ckpt_bad.bin");
}

TEST_CASE("fan-in initialization is seeded and correctly scaled") {
    Rng a(77), b(77), c(78);
    Tensor<double> t1({20000});
    Tensor<double> t2({20000});
    Tensor<double> t3({20000});
    nn::he_normal_fill(t1, 50, a);
    nn::he_normal_fill(t2, 50, b);
    nn::he_normal_fill(t3, 50, c);
    CHECK(t1.v == t2.v);
    CHECK(t1.v != t3.v);

    double mean = 0.0;
    for (double v : t1.v) mean += v;
    mean /= static_cast<double>(t1.v.size());
    double var = 0.0;
    for (double v : t1.v) var += (v - mean) * (v - mean);
    var /= static_cast<double>(t1.v.size() - 1);
    double want = 2.0 / 50.0;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(want).epsilon(0.05));
}
