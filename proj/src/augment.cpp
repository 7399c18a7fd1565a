#include "shapeshot/augment.hpp"

#include <algorithm>
#include <cmath>

#include "shapeshot/errors.hpp"

namespace shapeshot {

namespace {

double luma(const Image& img, std::size_t y, std::size_t x) {
    return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

void flip_horizontal(Image& img) {
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width / 2; ++x)
            for (std::size_t c = 0; c < img.channels; ++c) std::swap(img.at(y, x, c), img.at(y, img.width - 1 - x, c));
}

Image crop_and_resize(const Image& img, const AugmentationSpec& spec) {
    const auto window = [](std::size_t side, double fraction) {
        const auto w = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(side)));
        return std::clamp<std::size_t>(w, 1, side);
    };
    const std::size_t ch = window(img.height, spec.crop_fraction);
    const std::size_t cw = window(img.width, spec.crop_fraction);
    if (ch == img.height && cw == img.width) return img;
    const double y0 = std::floor(spec.crop_offset_y * static_cast<double>(img.height - ch));
    const double x0 = std::floor(spec.crop_offset_x * static_cast<double>(img.width - cw));

    // Pixel-center aligned bilinear sampling of the window onto the full grid.
    Image out(img.height, img.width, img.channels);
    const double sy = static_cast<double>(ch) / static_cast<double>(img.height);
    const double sx = static_cast<double>(cw) / static_cast<double>(img.width);
    for (std::size_t y = 0; y < img.height; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(ch - 1));
        const auto y_lo = static_cast<std::size_t>(fy);
        const std::size_t y_hi = std::min(y_lo + 1, ch - 1);
        const double wy = fy - static_cast<double>(y_lo);
        for (std::size_t x = 0; x < img.width; ++x) {
            const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(cw - 1));
            const auto x_lo = static_cast<std::size_t>(fx);
            const std::size_t x_hi = std::min(x_lo + 1, cw - 1);
            const double wx = fx - static_cast<double>(x_lo);
            const auto yy0 = static_cast<std::size_t>(y0) + y_lo, yy1 = static_cast<std::size_t>(y0) + y_hi;
            const auto xx0 = static_cast<std::size_t>(x0) + x_lo, xx1 = static_cast<std::size_t>(x0) + x_hi;
            for (std::size_t c = 0; c < img.channels; ++c) {
                const double top = (1.0 - wx) * img.at(yy0, xx0, c) + wx * img.at(yy0, xx1, c);
                const double bottom = (1.0 - wx) * img.at(yy1, xx0, c) + wx * img.at(yy1, xx1, c);
                out.at(y, x, c) = (1.0 - wy) * top + wy * bottom;
            }
        }
    }
    clamp_unit(out);
    return out;
}

}  // namespace

AugmentationSpec sample_augmentation(Rng& rng, const AugmentationRanges& ranges) {
    AugmentationSpec spec;
    spec.flip = bernoulli(rng, 0.5);
    spec.brightness_delta = uniform(rng, -ranges.brightness, ranges.brightness);
    spec.contrast_factor = uniform(rng, 1.0 - ranges.contrast, 1.0 + ranges.contrast);
    spec.saturation_factor = uniform(rng, 1.0 - ranges.saturation, 1.0 + ranges.saturation);
    spec.crop_fraction = uniform(rng, ranges.min_crop, ranges.max_crop);
    spec.crop_offset_x = uniform(rng, 0.0, 1.0);
    spec.crop_offset_y = uniform(rng, 0.0, 1.0);
    return spec;
}

Image apply(const AugmentationSpec& spec, const Image& image) {
    if (image.channels != 3) throw DimensionError("augmentation expects 3-channel images");
    if (!(spec.crop_fraction > 0.0 && spec.crop_fraction <= 1.0)) {
        throw ContractError("crop_fraction must lie in (0, 1]");
    }
    Image img = image;
    if (spec.flip) flip_horizontal(img);
    if (spec.brightness_delta != 0.0) {
        for (auto& v : img.pixels) v += spec.brightness_delta;
        clamp_unit(img);
    }
    if (spec.contrast_factor != 1.0) {
        double m = 0.0;
        for (std::size_t y = 0; y < img.height; ++y)
            for (std::size_t x = 0; x < img.width; ++x) m += luma(img, y, x);
        m /= static_cast<double>(img.height * img.width);
        for (auto& v : img.pixels) v = m + spec.contrast_factor * (v - m);
        clamp_unit(img);
    }
    if (spec.saturation_factor != 1.0) {
        for (std::size_t y = 0; y < img.height; ++y)
            for (std::size_t x = 0; x < img.width; ++x) {
                const double g = luma(img, y, x);
                for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = g + spec.saturation_factor * (img.at(y, x, c) - g);
            }
        clamp_unit(img);
    }
    return crop_and_resize(img, spec);
}

}  // namespace shapeshot
