#include "shapeshot/image.hpp"

#include <algorithm>

#include "shapeshot/errors.hpp"

namespace shapeshot {

void clamp_unit(Image& image) {
    for (auto& v : image.pixels) v = std::clamp(v, 0.0, 1.0);
}

Tensor images_to_batch(std::span<const Image* const> images) {
    if (images.empty()) throw ContractError("images_to_batch: empty batch");
    const auto& first = *images.front();
    const std::size_t h = first.height, w = first.width, c = first.channels;
    std::vector<double> values(images.size() * c * h * w);
    for (std::size_t n = 0; n < images.size(); ++n) {
        const auto& img = *images[n];
        if (img.height != h || img.width != w || img.channels != c) {
            throw DimensionError("images_to_batch: mixed image sizes in one batch");
        }
        double* dst = values.data() + n * c * h * w;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t ch = 0; ch < c; ++ch) dst[(ch * h + y) * w + x] = img.pixels[(y * w + x) * c + ch];
    }
    return Tensor::from({images.size(), c, h, w}, std::move(values));
}

Tensor images_to_batch(std::span<const Image> images) {
    std::vector<const Image*> ptrs;
    ptrs.reserve(images.size());
    for (const auto& img : images) ptrs.push_back(&img);
    return images_to_batch(std::span<const Image* const>(ptrs));
}

}  // namespace shapeshot
