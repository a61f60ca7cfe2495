#include "doctest.h"

#include "cvr/nn_ops.hpp"
#include "test_util.hpp"

using namespace cvr;
using namespace cvr::testutil;

namespace {

Tensor rand_t(std::vector<int> shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_tensor(std::move(shape), rng);
}

}  // namespace

TEST_CASE("conv2d forward matches a direct loop") {
    std::mt19937_64 rng(7);
    Tensor x = random_tensor({2, 3, 5, 5}, rng);
    Tensor w = random_tensor({4, 3, 3, 3}, rng);
    Tensor b = random_tensor({4}, rng);
    VarPtr out = nn::conv2d(make_leaf(x), make_leaf(w), make_leaf(b), 1, 1);
    REQUIRE(out->value.shape() == std::vector<int>{2, 4, 5, 5});
    // direct evaluation at a few positions
    auto ref = [&](int n, int co, int oh, int ow) {
        double s = b[co];
        for (int ci = 0; ci < 3; ++ci)
            for (int ki = 0; ki < 3; ++ki)
                for (int kj = 0; kj < 3; ++kj) {
                    const int ih = oh - 1 + ki, iw = ow - 1 + kj;
                    if (ih < 0 || ih >= 5 || iw < 0 || iw >= 5) continue;
                    s += x[((n * 3 + ci) * 5 + ih) * 5 + iw] *
                         w[((co * 3 + ci) * 3 + ki) * 3 + kj];
                }
        return s;
    };
    for (int n = 0; n < 2; ++n)
        for (int co = 0; co < 4; ++co)
            for (int oh = 0; oh < 5; ++oh)
                for (int ow = 0; ow < 5; ++ow)
                    CHECK(out->value[((n * 4 + co) * 5 + oh) * 5 + ow] ==
                          doctest::Approx(ref(n, co, oh, ow)).epsilon(1e-12));
}

TEST_CASE("conv2d gradients match finite differences") {
    for (int stride : {1, 2}) {
        auto fn = [&](const std::vector<VarPtr>& v) {
            return nn::sum_sq_diff(nn::conv2d(v[0], v[1], v[2], stride, 1),
                                   rand_t({1, 2, stride == 1 ? 4 : 2, stride == 1 ? 4 : 2}, 99));
        };
        CHECK(gradcheck(fn, {rand_t({1, 2, 4, 4}, 1), rand_t({2, 2, 3, 3}, 2),
                             rand_t({2}, 3)}) < 1e-7);
    }
}

TEST_CASE("conv3d gradients match finite differences") {
    for (int stride : {1, 2}) {
        const int o = stride == 1 ? 4 : 2;
        auto fn = [&](const std::vector<VarPtr>& v) {
            return nn::sum_sq_diff(nn::conv3d(v[0], v[1], v[2], stride, 1),
                                   rand_t({1, 2, o, o, o}, 99));
        };
        CHECK(gradcheck(fn, {rand_t({1, 1, 4, 4, 4}, 4), rand_t({2, 1, 3, 3, 3}, 5),
                             rand_t({2}, 6)}) < 1e-7);
    }
}

TEST_CASE("batch_norm training mode gradients") {
    Tensor rm = Tensor::zeros({3}), rv = Tensor::full({3}, 1.0);
    auto fn = [&](const std::vector<VarPtr>& v) {
        Tensor rm2 = rm, rv2 = rv;  // do not mutate across calls
        return nn::sum_sq_diff(
            nn::batch_norm(v[0], v[1], v[2], &rm2, &rv2, true, false),
            rand_t({2, 3, 4}, 99));
    };
    CHECK(gradcheck(fn, {rand_t({2, 3, 4}, 7), rand_t({3}, 8), rand_t({3}, 9)}) < 1e-6);
}

TEST_CASE("batch_norm inference mode uses running stats") {
    Tensor rm = rand_t({2}, 10), rv = Tensor::from({2}, {0.5, 2.0});
    Tensor x = rand_t({1, 2, 3}, 11);
    auto g = make_leaf(Tensor::full({2}, 1.5)), b = make_leaf(Tensor::full({2}, -0.25));
    VarPtr y = nn::batch_norm(make_leaf(x), g, b, &rm, &rv, false, false);
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 3; ++i) {
            const double expect =
                1.5 * (x[c * 3 + i] - rm[c]) / std::sqrt(rv[c] + 1e-5) - 0.25;
            CHECK(y->value[c * 3 + i] == doctest::Approx(expect).epsilon(1e-12));
        }
    auto fn = [&](const std::vector<VarPtr>& v) {
        return nn::sum_sq_diff(nn::batch_norm(v[0], v[1], v[2], &rm, &rv, false, false),
                               rand_t({1, 2, 3}, 99));
    };
    CHECK(gradcheck(fn, {x, Tensor::full({2}, 1.5), Tensor::full({2}, -0.25)}) < 1e-7);
}

TEST_CASE("batch_norm updates running stats only when asked") {
    Tensor rm = Tensor::zeros({1}), rv = Tensor::full({1}, 1.0);
    Tensor x = Tensor::from({2, 1}, {1.0, 3.0});
    auto g = make_leaf(Tensor::full({1}, 1.0)), b = make_leaf(Tensor::zeros({1}));
    nn::batch_norm(make_leaf(x), g, b, &rm, &rv, true, false);
    CHECK(rm[0] == 0.0);
    nn::batch_norm(make_leaf(x), g, b, &rm, &rv, true, true);
    CHECK(rm[0] == doctest::Approx(0.1 * 2.0));  // momentum 0.1, batch mean 2
    CHECK(rv[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 1.0));  // batch var 1
}

TEST_CASE("pool, upsample, activation, linear, pooling gradients") {
    auto lrelu_fn = [](const std::vector<VarPtr>& v) {
        return nn::sum_sq_diff(nn::leaky_relu(v[0], 0.01), rand_t({2, 3}, 99));
    };
    CHECK(gradcheck(lrelu_fn, {rand_t({2, 3}, 12)}) < 1e-7);

    auto pool_fn = [](const std::vector<VarPtr>& v) {
        return nn::sum_sq_diff(nn::max_pool2d(v[0], 2), rand_t({1, 2, 2, 2}, 98));
    };
    CHECK(gradcheck(pool_fn, {rand_t({1, 2, 4, 4}, 13)}) < 1e-7);

    auto up_fn = [](const std::vector<VarPtr>& v) {
        return nn::sum_sq_diff(nn::upsample_nearest2d(v[0], 2), rand_t({1, 1, 4, 4}, 97));
    };
    CHECK(gradcheck(up_fn, {rand_t({1, 1, 2, 2}, 14)}) < 1e-7);

    auto lin_fn = [](const std::vector<VarPtr>& v) {
        return nn::sum_sq_diff(nn::linear(v[0], v[1], v[2]), rand_t({2, 3}, 96));
    };
    CHECK(gradcheck(lin_fn, {rand_t({2, 4}, 15), rand_t({3, 4}, 16), rand_t({3}, 17)}) < 1e-7);

    auto gap_fn = [](const std::vector<VarPtr>& v) {
        return nn::sum_sq_diff(nn::global_avg_pool3d(v[0]), rand_t({1, 2}, 95));
    };
    CHECK(gradcheck(gap_fn, {rand_t({1, 2, 2, 2, 2}, 18)}) < 1e-7);

    auto mix_fn = [](const std::vector<VarPtr>& v) {
        VarPtr s = nn::add(nn::scale(v[0], 0.5), nn::reshape(v[1], {2, 3}));
        return nn::sum_sq_diff(s, rand_t({2, 3}, 94));
    };
    CHECK(gradcheck(mix_fn, {rand_t({2, 3}, 19), rand_t({6}, 20)}) < 1e-7);
}

TEST_CASE("shape mismatches are rejected") {
    CHECK_THROWS_AS(nn::add(make_leaf(Tensor({2})), make_leaf(Tensor({3}))),
                    std::invalid_argument);
    CHECK_THROWS_AS(nn::conv2d(make_leaf(Tensor({1, 2, 4, 4})),
                               make_leaf(Tensor({2, 3, 3, 3})), make_leaf(Tensor({2})), 1, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(nn::sum_sq_diff(make_leaf(Tensor({2})), Tensor({3})),
                    std::invalid_argument);
}
