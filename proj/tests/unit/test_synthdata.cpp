#include <gtest/gtest.h>

#include "helpers.hpp"
#include "shapeshot/errors.hpp"
#include "shapeshot/synthdata.hpp"

using namespace shapeshot;
using shapeshot::testing::constant_image;

namespace {

GeneratorConfig tiny_config(std::uint64_t seed = 7) {
    GeneratorConfig cfg;
    cfg.pretrain_classes = 4;
    cfg.validation_classes = 2;
    cfg.test_classes = 3;
    cfg.images_per_class = 5;
    cfg.resolution = 16;
    cfg.content_bank_size = 16;
    cfg.seed = seed;
    return cfg;
}

Mask full_mask(std::size_t res) { return Mask{res, res, std::vector<std::uint8_t>(res * res, 1)}; }

TextureSpec flat_texture(double value) {
    TextureSpec t = TextureSpec::from_id(kStyleBankOffset + 3);
    t.color_a = {value, value, value};
    t.color_b = {value, value, value};
    return t;
}

}  // namespace

TEST(Generate, SameSeedIsIdentical) {
    const auto a = generate_dataset(tiny_config(7));
    const auto b = generate_dataset(tiny_config(7));
    EXPECT_EQ(a.pretrain, b.pretrain);
    EXPECT_EQ(a.validation, b.validation);
    EXPECT_EQ(a.test, b.test);
    EXPECT_NE(a.test, generate_dataset(tiny_config(8)).test);
}

TEST(Generate, SplitsHaveRequestedShape) {
    const auto s = generate_dataset(tiny_config());
    EXPECT_EQ(s.pretrain.classes.size(), 4u);
    EXPECT_EQ(s.validation.classes.size(), 2u);
    EXPECT_EQ(s.test.classes.size(), 3u);
    EXPECT_EQ(s.test.split, Split::test);
    for (const auto* ds : {&s.pretrain, &s.validation, &s.test}) {
        EXPECT_EQ(ds->resolution(), 16u);
        EXPECT_EQ(ds->min_images_per_class(), 5u);
        for (const auto& c : ds->classes) {
            ASSERT_EQ(c.masks.size(), c.images.size());
            for (const auto& img : c.images)
                for (double v : img.pixels) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
        }
    }
    EXPECT_NO_THROW(assert_disjoint_classes({&s.pretrain, &s.validation, &s.test}));
}

TEST(Generate, ImagesAreSilhouetteComposites) {
    const auto s = generate_dataset(tiny_config());
    for (const auto& c : s.test.classes)
        for (const auto& m : c.masks) {
            std::size_t inside = 0;
            for (auto b : m.bits) inside += b;
            EXPECT_GT(inside, 0u);
            EXPECT_LT(inside, m.bits.size());
        }
}

TEST(Generate, RejectsTinyResolution) {
    auto cfg = tiny_config();
    cfg.resolution = 15;
    EXPECT_THROW(generate_dataset(cfg), ConfigError);
}

// Pretrain textures identify the class, evaluation textures do not.
TEST(Generate, TexturePolicyControlsTheShortcut) {
    auto cfg = tiny_config(3);
    cfg.pretrain_classes = 5;
    cfg.test_classes = 5;
    cfg.images_per_class = 20;
    cfg.resolution = 24;
    const auto s = generate_dataset(cfg);
    EXPECT_GT(texture_oracle_accuracy(s.pretrain), 0.9);
    EXPECT_LT(texture_oracle_accuracy(s.test), 0.5);
}

TEST(Generate, SplitAndPolicyNamesRoundTrip) {
    for (auto sp : {Split::pretrain, Split::validation, Split::test}) EXPECT_EQ(split_from_string(to_string(sp)), sp);
    for (auto p : {TexturePolicy::class_correlated, TexturePolicy::decorrelated})
        EXPECT_EQ(texture_policy_from_string(to_string(p)), p);
    EXPECT_THROW(split_from_string("train"), ConfigError);
}

TEST(Shapes, ClassesAreSeparableBySilhouette) {
    std::vector<std::uint32_t> ids{0, 1, 2, 3, 4, 5, 6, 7};
    const auto sep = shape_separability(ids, 5);
    EXPECT_GT(sep.mean_within_iou, sep.mean_between_iou);
    EXPECT_GE(sep.separable_fraction, 0.75);
}

TEST(Shapes, RadiusIsNormalized) {
    const auto shape = ShapeClass::for_class(4, 11);
    double max_r = 0.0;
    for (int i = 0; i < 3600; ++i) {
        const double r = shape.radius(i * 2.0 * 3.141592653589793 / 3600.0);
        EXPECT_GT(r, 0.0);
        max_r = std::max(max_r, r);
    }
    EXPECT_NEAR(max_r, 1.0, 1e-2);
}

TEST(Stylize, AlphaZeroIsIdentity) {
    Rng rng(1);
    const auto img = shapeshot::testing::random_image(16, rng);
    EXPECT_EQ(stylize(img, full_mask(16), TextureSpec::from_id(kStyleBankOffset), 0.0, 5), img);
}

TEST(Stylize, AlphaOneIsTheRestyledRender) {
    Rng rng(2);
    const auto a = shapeshot::testing::random_image(16, rng);
    const auto b = shapeshot::testing::random_image(16, rng);
    const auto mask = generate_dataset(tiny_config()).test.classes[0].masks[0];
    const auto style = TextureSpec::from_id(kStyleBankOffset + 9);
    const auto from_a = stylize(a, mask, style, 1.0, 5);
    EXPECT_EQ(from_a, stylize(b, mask, style, 1.0, 5));
    EXPECT_NE(from_a, a);
}

TEST(Stylize, BlendArithmetic) {
    const auto out = stylize(constant_image(16, 0.5, 0.5, 0.5), full_mask(16), flat_texture(1.0), 0.4, 3);
    for (double v : out.pixels) EXPECT_NEAR(v, 0.7, 1e-12);
}

TEST(Stylize, BlendMatchesEndpointsEverywhere) {
    Rng rng(4);
    const auto img = shapeshot::testing::random_image(16, rng);
    const auto mask = generate_dataset(tiny_config()).pretrain.classes[1].masks[2];
    const auto style = TextureSpec::from_id(kStyleBankOffset + 17);
    const auto restyled = stylize(img, mask, style, 1.0, 8);
    const auto out = stylize(img, mask, style, 0.4, 8);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        EXPECT_NEAR(out.pixels[i], 0.6 * img.pixels[i] + 0.4 * restyled.pixels[i], 1e-12);
}

TEST(Stylize, PreservesTheSilhouette) {
    const auto ds = generate_dataset(tiny_config()).pretrain;
    const auto& mask = ds.classes[0].masks[0];
    const auto inside_style = flat_texture(1.0);
    const auto out = stylize(constant_image(16, 0.0, 0.0, 0.0), mask, inside_style, 1.0, 2, 0.5);
    for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 0; x < 16; ++x) {
            if (mask.inside(y, x)) {
                EXPECT_EQ(out.at(y, x, 0), 1.0);
            } else {
                EXPECT_LE(out.at(y, x, 0), 0.5);
            }
        }
}

TEST(Stylize, RejectsBadArguments) {
    const auto img = constant_image(16, 0.5, 0.5, 0.5);
    EXPECT_THROW(stylize(img, full_mask(16), flat_texture(1.0), 1.5, 1), ContractError);
    EXPECT_THROW(stylize(img, full_mask(8), flat_texture(1.0), 0.5, 1), DimensionError);
}

TEST(StylizedVariants, TenPerImage) {
    const auto s = generate_dataset(tiny_config());
    const auto styl = build_stylized_variants(s.pretrain, 10, 0.4, 3);
    EXPECT_TRUE(styl.has_stylized_variants());
    for (const auto& c : styl.classes) {
        ASSERT_EQ(c.stylized.size(), c.images.size());
        for (const auto& v : c.stylized) EXPECT_EQ(v.size(), 10u);
    }
    EXPECT_EQ(styl, build_stylized_variants(s.pretrain, 10, 0.4, 3));
}

TEST(StylizedVariants, ZeroVariantsIsANoOp) {
    const auto s = generate_dataset(tiny_config());
    EXPECT_EQ(build_stylized_variants(s.pretrain, 0, 0.4, 3), s.pretrain);
}

TEST(StylizedVariants, PretrainOnly) {
    const auto s = generate_dataset(tiny_config());
    EXPECT_THROW(build_stylized_variants(s.validation, 10, 0.4, 3), ContractError);
    EXPECT_THROW(build_stylized_variants(s.test, 10, 0.4, 3), ContractError);
}

TEST(Splits, OverlapIsDetected) {
    auto s = generate_dataset(tiny_config());
    s.test.classes[0].class_id = s.pretrain.classes[2].class_id;
    EXPECT_THROW(assert_disjoint_classes({&s.pretrain, &s.test}), ContractError);
}
