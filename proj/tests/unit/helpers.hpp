#pragma once

#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "shapeshot/ops.hpp"
#include "shapeshot/rng.hpp"
#include "shapeshot/synthdata.hpp"
#include "shapeshot/tensor.hpp"

namespace shapeshot::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool requires_grad = true) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = uniform(rng, lo, hi);
    return Tensor::from(shape, std::move(v), requires_grad);
}

// Reduces an arbitrary output to a scalar with fixed random weights, so every
// output element contributes a distinct amount to the gradient.
inline Tensor weighted_sum(const Tensor& out, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> w(out.numel());
    for (auto& x : w) x = uniform(rng, 0.5, 1.5);
    return sum(mul(out, Tensor::from(out.shape(), std::move(w))));
}

using Fn = std::function<Tensor(const std::vector<Tensor>&)>;

// Central differences on every input element.
inline void expect_gradients_match(const Fn& f, std::vector<Tensor> inputs, double step = 1e-5, double rel = 1e-4,
                                   double abs_tol = 1e-8) {
    for (auto& t : inputs) t.zero_grad();
    const Tensor loss = weighted_sum(f(inputs), 99);
    loss.backward();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto& t = inputs[i];
        if (!t.requires_grad()) continue;
        ASSERT_TRUE(t.has_grad()) << "input " << i;
        const std::vector<double> analytic(t.grad().begin(), t.grad().end());
        NoGradGuard no_grad;
        for (std::size_t j = 0; j < t.numel(); ++j) {
            const double orig = t.values()[j];
            t.mutable_values()[j] = orig + step;
            const double up = weighted_sum(f(inputs), 99).item();
            t.mutable_values()[j] = orig - step;
            const double down = weighted_sum(f(inputs), 99).item();
            t.mutable_values()[j] = orig;
            const double numeric = (up - down) / (2.0 * step);
            const double err = std::abs(numeric - analytic[j]);
            EXPECT_TRUE(err <= abs_tol || err <= rel * std::max(std::abs(numeric), std::abs(analytic[j])))
                << "input " << i << " element " << j << ": analytic " << analytic[j] << " numeric " << numeric;
        }
    }
}

inline Image constant_image(std::size_t res, double r, double g, double b) {
    Image img(res, res, 3);
    for (std::size_t y = 0; y < res; ++y)
        for (std::size_t x = 0; x < res; ++x) {
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
    return img;
}

inline Image random_image(std::size_t res, Rng& rng) {
    Image img(res, res, 3);
    for (auto& v : img.pixels) v = uniform(rng, 0.0, 1.0);
    return img;
}

// n_classes classes of n_images random images each, ids starting at first_id.
inline ClassDataset random_dataset(std::size_t n_classes, std::size_t n_images, std::size_t res, std::uint64_t seed,
                                   std::uint32_t first_id = 0, Split split = Split::test) {
    Rng rng(seed);
    ClassDataset ds;
    ds.split = split;
    for (std::size_t k = 0; k < n_classes; ++k) {
        ClassData c;
        c.class_id = first_id + static_cast<std::uint32_t>(k);
        for (std::size_t i = 0; i < n_images; ++i) c.images.push_back(random_image(res, rng));
        ds.classes.push_back(std::move(c));
    }
    return ds;
}

}  // namespace shapeshot::testing
