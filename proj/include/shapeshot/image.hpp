#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "shapeshot/tensor.hpp"

namespace shapeshot {

// H x W x C, row-major, channel values in [0, 1].
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 3;
    std::vector<double> pixels;

    Image() = default;
    Image(std::size_t h, std::size_t w, std::size_t c = 3, double fill = 0.0)
        : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

    double& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
    double at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }

    bool operator==(const Image&) const = default;
};

// Binary silhouette, H x W, 1 = inside the shape.
struct Mask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> bits;

    bool inside(std::size_t y, std::size_t x) const { return bits[y * width + x] != 0; }
    bool operator==(const Mask&) const = default;
};

void clamp_unit(Image& image);

// Packs images into an [N, C, H, W] tensor. All images must share a size.
Tensor images_to_batch(std::span<const Image> images);
Tensor images_to_batch(std::span<const Image* const> images);

}  // namespace shapeshot
