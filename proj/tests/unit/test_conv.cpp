#include <gtest/gtest.h>

#include "helpers.hpp"
#include "shapeshot/errors.hpp"

using namespace shapeshot;
using shapeshot::testing::random_tensor;

namespace {

// Quadruple-loop cross-correlation with explicit zero padding.
std::vector<double> naive_conv(const Tensor& x, const Tensor& k, std::size_t stride, std::size_t pad) {
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t co = k.dim(0), kh = k.dim(2), kw = k.dim(3);
    const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
    std::vector<double> out(n * co * oh * ow, 0.0);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t o = 0; o < co; ++o)
            for (std::size_t i = 0; i < oh; ++i)
                for (std::size_t j = 0; j < ow; ++j) {
                    double acc = 0.0;
                    for (std::size_t ci = 0; ci < c; ++ci)
                        for (std::size_t u = 0; u < kh; ++u)
                            for (std::size_t v = 0; v < kw; ++v) {
                                const long y = static_cast<long>(i * stride + u) - static_cast<long>(pad);
                                const long z = static_cast<long>(j * stride + v) - static_cast<long>(pad);
                                if (y < 0 || z < 0 || y >= static_cast<long>(h) || z >= static_cast<long>(w)) continue;
                                acc += x.values()[((b * c + ci) * h + y) * w + z] *
                                       k.values()[((o * c + ci) * kh + u) * kw + v];
                            }
                    out[((b * co + o) * oh + i) * ow + j] = acc;
                }
    return out;
}

}  // namespace

TEST(Conv2d, AllOnes) {
    const auto out = conv2d(Tensor::full({1, 1, 3, 3}, 1.0), Tensor::full({1, 1, 2, 2}, 1.0), 1, 0);
    EXPECT_EQ(out.shape(), (Shape{1, 1, 2, 2}));
    for (double v : out.values()) EXPECT_EQ(v, 4.0);
}

TEST(Conv2d, OneByOneIdentityKernel) {
    Rng rng(3);
    const auto x = random_tensor({2, 1, 4, 5}, rng, -1, 1, false);
    const auto out = conv2d(x, Tensor::full({1, 1, 1, 1}, 1.0), 1, 0);
    ASSERT_EQ(out.shape(), x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(out.values()[i], x.values()[i]);
}

TEST(Conv2d, MatchesNaiveOracleOnFixedCase) {
    Rng rng(11);
    const auto x = random_tensor({1, 2, 5, 5}, rng, -1, 1, false);
    const auto k = random_tensor({3, 2, 3, 3}, rng, -1, 1, false);
    const auto out = conv2d(x, k, 1, 0);
    const auto ref = naive_conv(x, k, 1, 0);
    ASSERT_EQ(out.numel(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(out.values()[i], ref[i], 1e-12);
}

TEST(Conv2d, MatchesNaiveOracleOnRandomConfigurations) {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 2), c = 1 + uniform_index(rng, 3), co = 1 + uniform_index(rng, 3);
        const std::size_t h = 1 + uniform_index(rng, 8), w = 1 + uniform_index(rng, 8);
        const std::size_t pad = uniform_index(rng, 3), stride = 1 + uniform_index(rng, 3);
        const std::size_t kh = 1 + uniform_index(rng, std::min<std::size_t>(h + 2 * pad, 5));
        const std::size_t kw = 1 + uniform_index(rng, std::min<std::size_t>(w + 2 * pad, 5));
        const auto x = random_tensor({n, c, h, w}, rng, -1, 1, false);
        const auto k = random_tensor({co, c, kh, kw}, rng, -1, 1, false);
        const auto out = conv2d(x, k, stride, pad);
        const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
        ASSERT_EQ(out.shape(), (Shape{n, co, oh, ow})) << "trial " << trial;
        const auto ref = naive_conv(x, k, stride, pad);
        for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(out.values()[i], ref[i], 1e-12) << "trial " << trial;
    }
}

TEST(Conv2d, Errors) {
    const auto x = Tensor::zeros({1, 2, 4, 4});
    EXPECT_THROW(conv2d(x, Tensor::zeros({1, 3, 3, 3}), 1, 0), DimensionError);
    EXPECT_THROW(conv2d(x, Tensor::zeros({1, 2, 5, 5}), 1, 0), DimensionError);
    EXPECT_NO_THROW(conv2d(x, Tensor::zeros({1, 2, 5, 5}), 1, 1));
    EXPECT_THROW(conv2d(x, Tensor::zeros({1, 2, 3, 3}), 0, 0), ContractError);
    EXPECT_THROW(conv2d(Tensor::zeros({2, 4, 4}), Tensor::zeros({1, 2, 3, 3}), 1, 0), DimensionError);
}
