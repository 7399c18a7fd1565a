#pragma once

#include "shapeshot/image.hpp"
#include "shapeshot/rng.hpp"

namespace shapeshot {

// Jitter magnitudes; sampled values are uniform in [-b, b] for brightness and
// [1 - f, 1 + f] for the multiplicative factors.
struct AugmentationRanges {
    double brightness = 0.2;
    double contrast = 0.2;
    double saturation = 0.2;
    double min_crop = 0.7;
    double max_crop = 1.0;
};

struct AugmentationSpec {
    bool flip = false;
    double brightness_delta = 0.0;
    double contrast_factor = 1.0;
    double saturation_factor = 1.0;
    double crop_fraction = 1.0;
    // Position of the crop window within the free space, each in [0, 1].
    double crop_offset_x = 0.0;
    double crop_offset_y = 0.0;

    static AugmentationSpec identity() { return {}; }
    bool operator==(const AugmentationSpec&) const = default;
};

AugmentationSpec sample_augmentation(Rng& rng, const AugmentationRanges& ranges = {});

// flip -> brightness -> contrast -> saturation -> crop -> bilinear resize back
// to the input size. Each color step clamps to [0, 1].
//   brightness: x + delta
//   contrast:   m + f (x - m), m = mean luma of the image
//   saturation: g + f (x - g), g = luma of the pixel
// Luma is 0.299 R + 0.587 G + 0.114 B. Steps with a neutral parameter are
// skipped, so the identity spec returns the input bit for bit.
Image apply(const AugmentationSpec& spec, const Image& image);

}  // namespace shapeshot
