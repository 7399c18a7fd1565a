#include <gtest/gtest.h>

#include "helpers.hpp"
#include "shapeshot/augment.hpp"
#include "shapeshot/errors.hpp"

using namespace shapeshot;
using shapeshot::testing::constant_image;
using shapeshot::testing::random_image;

TEST(Augment, SameSeedSameSpec) {
    Rng a(42), b(42);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_augmentation(a), sample_augmentation(b));
}

TEST(Augment, SampledParametersStayInRange) {
    Rng rng(1);
    const AugmentationRanges r;
    std::size_t flips = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const auto s = sample_augmentation(rng, r);
        flips += s.flip;
        EXPECT_LE(std::abs(s.brightness_delta), r.brightness);
        EXPECT_LE(std::abs(s.contrast_factor - 1.0), r.contrast);
        EXPECT_LE(std::abs(s.saturation_factor - 1.0), r.saturation);
        EXPECT_GE(s.crop_fraction, r.min_crop);
        EXPECT_LE(s.crop_fraction, r.max_crop);
        EXPECT_GE(s.crop_offset_x, 0.0);
        EXPECT_LE(s.crop_offset_y, 1.0);
    }
    // Binomial(4000, 0.5) has sd ~31.6; 5 sd is 158.
    EXPECT_NEAR(static_cast<double>(flips), n / 2.0, 158.0);
}

TEST(Augment, IdentitySpecReturnsInputExactly) {
    Rng rng(2);
    const auto img = random_image(16, rng);
    EXPECT_EQ(apply(AugmentationSpec::identity(), img), img);
}

TEST(Augment, FlipIsAnInvolution) {
    Rng rng(3);
    const auto img = random_image(15, rng);
    AugmentationSpec flip;
    flip.flip = true;
    const auto once = apply(flip, img);
    EXPECT_NE(once, img);
    EXPECT_EQ(once.at(2, 0, 1), img.at(2, 14, 1));
    EXPECT_EQ(apply(flip, once), img);
}

TEST(Augment, BrightnessIsAdditive) {
    AugmentationSpec s;
    s.brightness_delta = 0.1;
    const auto out = apply(s, constant_image(8, 0.5, 0.5, 0.5));
    for (double v : out.pixels) EXPECT_NEAR(v, 0.6, 1e-15);
}

TEST(Augment, OutputIsClampedAndSized) {
    Rng rng(4);
    const auto img = random_image(20, rng);
    AugmentationSpec s;
    s.brightness_delta = 0.9;
    s.contrast_factor = 3.0;
    s.crop_fraction = 0.5;
    s.crop_offset_x = 1.0;
    const auto out = apply(s, img);
    EXPECT_EQ(out.height, 20u);
    EXPECT_EQ(out.width, 20u);
    for (double v : out.pixels) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
}

TEST(Augment, ContrastAndSaturationKeepGreyFixedPoints) {
    AugmentationSpec s;
    s.contrast_factor = 1.5;
    s.saturation_factor = 0.3;
    const auto grey = constant_image(8, 0.4, 0.4, 0.4);
    const auto out = apply(s, grey);
    for (double v : out.pixels) EXPECT_NEAR(v, 0.4, 1e-12);
}

TEST(Augment, ZeroSaturationGivesLuma) {
    AugmentationSpec s;
    s.saturation_factor = 0.0;
    const auto out = apply(s, constant_image(4, 1.0, 0.0, 0.0));
    for (double v : out.pixels) EXPECT_NEAR(v, 0.299, 1e-12);
}

TEST(Augment, CropOfConstantImageIsConstant) {
    AugmentationSpec s;
    s.crop_fraction = 0.7;
    s.crop_offset_x = 0.3;
    s.crop_offset_y = 0.9;
    const auto out = apply(s, constant_image(16, 0.2, 0.3, 0.9));
    EXPECT_EQ(out.height, 16u);
    for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
        EXPECT_NEAR(out.pixels[i], 0.2, 1e-12);
        EXPECT_NEAR(out.pixels[i + 2], 0.9, 1e-12);
    }
}

TEST(Augment, CropSelectsTheWindow) {
    // Left half 0, right half 1: a half-width crop at the right edge sees only 1.
    Image img(8, 8, 3, 0.0);
    for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 4; x < 8; ++x)
            for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = 1.0;
    AugmentationSpec s;
    s.crop_fraction = 0.5;
    s.crop_offset_x = 1.0;
    for (double v : apply(s, img).pixels) EXPECT_EQ(v, 1.0);
}

TEST(Augment, RejectsBadInputs) {
    AugmentationSpec s;
    s.crop_fraction = 0.0;
    EXPECT_THROW(apply(s, constant_image(8, 0, 0, 0)), ContractError);
    EXPECT_THROW(apply(AugmentationSpec::identity(), Image(8, 8, 1)), DimensionError);
}
