#pragma once

// Synthetic shape-vs-texture benchmark.
//
// Every class is a silhouette family (a star-shaped region with a class-specific
// radial profile); every image is one silhouette placed at a random position,
// scale and rotation, with a procedural texture inside and another outside.
// In the pretrain split each class owns a fixed pair of textures, which makes
// texture a perfect shortcut for pretrain classes; in the validation and test
// splits textures are drawn independently of class, so only shape carries
// label information there.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "shapeshot/image.hpp"

namespace shapeshot {

enum class Split : std::uint8_t { pretrain = 0, validation = 1, test = 2 };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

enum class TexturePolicy { class_correlated, decorrelated };

std::string to_string(TexturePolicy policy);
TexturePolicy texture_policy_from_string(const std::string& name);

enum class TextureKind : std::uint8_t { stripes = 0, checker = 1, noise = 2, dots = 3 };

// Texture ids below kStyleBankOffset form the content bank (used for dataset
// images); ids from kStyleBankOffset on form the style bank used only by the
// stylizer, so the two never share a texture program.
inline constexpr std::uint64_t kStyleBankOffset = 1'000'000;

struct TextureSpec {
    std::uint64_t texture_id = 0;
    TextureKind kind = TextureKind::stripes;
    double frequency = 4.0;    // cycles per image side
    double orientation = 0.0;  // radians
    std::array<double, 3> color_a{};
    std::array<double, 3> color_b{};

    // The texture program is a pure function of the id.
    static TextureSpec from_id(std::uint64_t texture_id);
    // Both palette colors pulled toward their mean; 1 leaves them unchanged.
    TextureSpec with_contrast(double contrast) const;
};

// Renders the texture over a full h x w canvas; `seed` only moves phase and
// noise components, never the program.
Image render_texture(const TextureSpec& texture, std::size_t height, std::size_t width, std::uint64_t seed);

enum class ShapeFamily : std::uint8_t { blob = 0, polygon = 1, star = 2 };

struct ShapeClass {
    std::uint32_t class_id = 0;
    ShapeFamily family = ShapeFamily::blob;
    // blob: (a_j, phi_j) pairs for harmonics 2..; polygon/star: (angle, radius)
    // vertex pairs in order of increasing angle.
    std::vector<double> params;
    double norm = 1.0;  // scales the profile so its maximum radius is 1

    static ShapeClass for_class(std::uint32_t class_id, std::uint64_t seed);
    // Radius of the silhouette boundary along direction theta, in (0, 1].
    double radius(double theta) const;
};

struct Placement {
    double center_x = 0.5;  // fraction of the image side
    double center_y = 0.5;
    double size = 0.35;  // boundary radius as a fraction of the image side
    double rotation = 0.0;
};

Mask render_silhouette(const ShapeClass& shape, const Placement& placement, std::size_t resolution);

// Texture `inside` on the mask, `outside` elsewhere. With figure_ground g > 0
// the figure is lifted to g + (1 - g) * v and the ground dimmed to (1 - g) * v.
Image composite(const Mask& mask, const Image& inside, const Image& outside, double figure_ground = 0.0);

struct ClassData {
    std::uint32_t class_id = 0;
    std::vector<Image> images;
    std::vector<Mask> masks;  // parallel to images; may be empty after loading
    // stylized[i] holds the stylized variants of images[i]; empty if none.
    std::vector<std::vector<Image>> stylized;

    bool operator==(const ClassData&) const = default;
};

struct ClassDataset {
    Split split = Split::pretrain;
    std::vector<ClassData> classes;

    bool has_stylized_variants() const;
    std::size_t min_images_per_class() const;
    std::vector<std::uint32_t> class_ids() const;
    std::size_t resolution() const;
    bool operator==(const ClassDataset&) const = default;
};

struct GeneratorConfig {
    std::size_t pretrain_classes = 30;
    std::size_t validation_classes = 8;
    std::size_t test_classes = 8;
    std::size_t images_per_class = 60;
    std::size_t resolution = 32;
    TexturePolicy pretrain_policy = TexturePolicy::class_correlated;
    TexturePolicy eval_policy = TexturePolicy::decorrelated;
    std::size_t content_bank_size = 64;
    // Under the class-correlated policy, the chance an image uses its class's
    // texture pair rather than a random one.
    double texture_correlation = 1.0;
    double texture_contrast = 1.0;  // palette contrast of content textures
    double figure_ground = 0.0;     // see composite()
    std::uint64_t seed = 0;
};

struct GeneratedSplits {
    ClassDataset pretrain;
    ClassDataset validation;
    ClassDataset test;
};

inline constexpr std::size_t kMinResolution = 16;

// Class ids are assigned consecutively: pretrain, then validation, then test.
GeneratedSplits generate_dataset(const GeneratorConfig& config);

// (1 - alpha) * image + alpha * restyled, clamped to [0, 1]. restyled keeps the
// mask and fills it with `style`; the background gets a style-bank texture
// chosen from `seed`.
Image stylize(const Image& image, const Mask& mask, const TextureSpec& style, double alpha, std::uint64_t seed,
              double figure_ground = 0.0);

// Adds n_variants stylized copies of every image, each with an independently
// drawn style-bank texture. Only valid on the pretrain split.
ClassDataset build_stylized_variants(const ClassDataset& dataset, std::size_t n_variants, double alpha,
                                     std::uint64_t seed, std::size_t style_bank_size = 512,
                                     double figure_ground = 0.0);

// Throws ContractError if any class id appears in more than one dataset.
void assert_disjoint_classes(const std::vector<const ClassDataset*>& datasets);

// Texture-only baseline: nearest class centroid on global color and gradient
// statistics, fitted on even-indexed images and scored on odd-indexed ones.
double texture_oracle_accuracy(const ClassDataset& dataset);

struct ShapeSeparability {
    double mean_within_iou = 0.0;
    double mean_between_iou = 0.0;
    // Fraction of classes whose within-class IoU exceeds their mean IoU with
    // every other class.
    double separable_fraction = 0.0;
};

// Monte Carlo silhouette IoU at a fixed centered placement with random
// rotation, for the shape families of the given class ids.
ShapeSeparability shape_separability(const std::vector<std::uint32_t>& class_ids, std::uint64_t seed,
                                     std::size_t resolution = 32, std::size_t samples = 8);

}  // namespace shapeshot
