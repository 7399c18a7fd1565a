#include "shapeshot/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "shapeshot/errors.hpp"
#include "shapeshot/rng.hpp"

namespace shapeshot {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kTextureSalt = 0x7e47u;
constexpr std::uint64_t kShapeSalt = 0x5a4eu;
constexpr double kMaxRotation = kPi / 8.0;

double smoothstep_sign(double x) { return 0.5 + 0.5 * std::tanh(3.0 * x); }

std::array<double, 3> random_color(Rng& rng) {
    return {uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)};
}

double color_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
}

// Radius of the polygon through (angle, radius) vertices along theta.
double polygon_radius(const std::vector<double>& verts, double theta) {
    const std::size_t n = verts.size() / 2;
    theta = std::fmod(theta, kTwoPi);
    if (theta < 0) theta += kTwoPi;
    for (std::size_t i = 0; i < n; ++i) {
        const double a0 = verts[2 * i], r0 = verts[2 * i + 1];
        const std::size_t j = (i + 1) % n;
        double a1 = verts[2 * j];
        const double r1 = verts[2 * j + 1];
        if (j == 0) a1 += kTwoPi;
        double t = theta;
        if (t < a0) t += kTwoPi;
        if (t >= a0 && t <= a1) {
            const double span = a1 - a0;
            return r0 * r1 * std::sin(span) / (r0 * std::sin(t - a0) + r1 * std::sin(a1 - t));
        }
    }
    return verts[1];
}

}  // namespace

std::string to_string(Split split) {
    switch (split) {
        case Split::pretrain: return "pretrain";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "unknown";
}

Split split_from_string(const std::string& name) {
    if (name == "pretrain") return Split::pretrain;
    if (name == "validation") return Split::validation;
    if (name == "test") return Split::test;
    throw ConfigError("unknown split '" + name + "'");
}

std::string to_string(TexturePolicy policy) {
    return policy == TexturePolicy::class_correlated ? "class_correlated" : "decorrelated";
}

TexturePolicy texture_policy_from_string(const std::string& name) {
    if (name == "class_correlated") return TexturePolicy::class_correlated;
    if (name == "decorrelated") return TexturePolicy::decorrelated;
    throw ConfigError("unknown texture policy '" + name + "'");
}

TextureSpec TextureSpec::from_id(std::uint64_t texture_id) {
    Rng rng = make_rng(kTextureSalt, texture_id);
    TextureSpec t;
    t.texture_id = texture_id;
    t.kind = static_cast<TextureKind>(uniform_index(rng, 4));
    t.frequency = uniform(rng, 2.0, 7.0);
    t.orientation = uniform(rng, 0.0, kPi);
    t.color_a = random_color(rng);
    do {
        t.color_b = random_color(rng);
    } while (color_distance(t.color_a, t.color_b) < 0.6);
    return t;
}

TextureSpec TextureSpec::with_contrast(double contrast) const {
    if (!(contrast >= 0.0 && contrast <= 1.0)) throw ConfigError("texture contrast must lie in [0, 1]");
    TextureSpec t = *this;
    for (std::size_t c = 0; c < 3; ++c) {
        const double mid = 0.5 * (color_a[c] + color_b[c]);
        t.color_a[c] = mid + contrast * (color_a[c] - mid);
        t.color_b[c] = mid + contrast * (color_b[c] - mid);
    }
    return t;
}

Image render_texture(const TextureSpec& texture, std::size_t height, std::size_t width, std::uint64_t seed) {
    Rng rng(seed);
    const double phase_u = uniform(rng, 0.0, kTwoPi);
    const double phase_v = uniform(rng, 0.0, kTwoPi);
    constexpr int kWaves = 6;
    std::array<double, kWaves> wave_angle{}, wave_freq{}, wave_phase{};
    for (int k = 0; k < kWaves; ++k) {
        wave_angle[k] = uniform(rng, 0.0, kPi);
        wave_freq[k] = texture.frequency * uniform(rng, 0.7, 1.3);
        wave_phase[k] = uniform(rng, 0.0, kTwoPi);
    }
    const double co = std::cos(texture.orientation), so = std::sin(texture.orientation);

    Image out(height, width, 3);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(width);
            const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(height);
            const double ru = u * co + v * so;
            const double rv = -u * so + v * co;
            double s = 0.0;
            switch (texture.kind) {
                case TextureKind::stripes:
                    s = 0.5 + 0.5 * std::sin(kTwoPi * texture.frequency * ru + phase_u);
                    break;
                case TextureKind::checker:
                    s = smoothstep_sign(std::sin(kTwoPi * texture.frequency * ru + phase_u) *
                                        std::sin(kTwoPi * texture.frequency * rv + phase_v));
                    break;
                case TextureKind::noise: {
                    double acc = 0.0;
                    for (int k = 0; k < kWaves; ++k) {
                        const double proj = u * std::cos(wave_angle[k]) + v * std::sin(wave_angle[k]);
                        acc += std::cos(kTwoPi * wave_freq[k] * proj + wave_phase[k]);
                    }
                    s = std::clamp(0.5 + acc / (2.0 * std::sqrt(static_cast<double>(kWaves))), 0.0, 1.0);
                    break;
                }
                case TextureKind::dots: {
                    const double fu = texture.frequency * ru + phase_u / kTwoPi;
                    const double fv = texture.frequency * rv + phase_v / kTwoPi;
                    const double du = fu - std::floor(fu) - 0.5;
                    const double dv = fv - std::floor(fv) - 0.5;
                    s = smoothstep_sign((0.3 - std::sqrt(du * du + dv * dv)) * 8.0);
                    break;
                }
            }
            for (std::size_t c = 0; c < 3; ++c) {
                out.at(y, x, c) = (1.0 - s) * texture.color_a[c] + s * texture.color_b[c];
            }
        }
    }
    clamp_unit(out);
    return out;
}

ShapeClass ShapeClass::for_class(std::uint32_t class_id, std::uint64_t seed) {
    Rng rng = make_rng(derive_seed(seed, kShapeSalt), class_id);
    ShapeClass s;
    s.class_id = class_id;
    s.family = static_cast<ShapeFamily>(uniform_index(rng, 3));
    switch (s.family) {
        case ShapeFamily::blob: {
            // Harmonics 2..4; a minimum total amplitude keeps blobs away from
            // near-circles, which would all look alike.
            double energy = 0.0;
            do {
                s.params.clear();
                energy = 0.0;
                for (int j = 2; j <= 4; ++j) {
                    const double a = uniform(rng, -0.28, 0.28);
                    s.params.push_back(a);
                    s.params.push_back(uniform(rng, 0.0, kTwoPi));
                    energy += std::abs(a);
                }
            } while (energy < 0.3);
            break;
        }
        case ShapeFamily::polygon: {
            const std::size_t n = 3 + uniform_index(rng, 5);
            const double step = kTwoPi / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                s.params.push_back(step * (static_cast<double>(i) + 0.25 + uniform(rng, -0.2, 0.2)));
                s.params.push_back(uniform(rng, 0.65, 1.0));
            }
            break;
        }
        case ShapeFamily::star: {
            const std::size_t spikes = 3 + uniform_index(rng, 5);
            const double inner = uniform(rng, 0.35, 0.6);
            const double step = kPi / static_cast<double>(spikes);
            const double offset = uniform(rng, 0.0, step);
            for (std::size_t i = 0; i < 2 * spikes; ++i) {
                s.params.push_back(offset + step * static_cast<double>(i));
                s.params.push_back(i % 2 == 0 ? 1.0 : inner);
            }
            break;
        }
    }
    double max_r = 0.0;
    for (int k = 0; k < 720; ++k) max_r = std::max(max_r, s.radius(kTwoPi * k / 720.0));
    s.norm = 1.0 / max_r;
    return s;
}

double ShapeClass::radius(double theta) const {
    double r = 1.0;
    if (family == ShapeFamily::blob) {
        for (std::size_t j = 0; j < params.size() / 2; ++j) {
            r += params[2 * j] * std::cos(static_cast<double>(j + 2) * theta + params[2 * j + 1]);
        }
    } else {
        r = polygon_radius(params, theta);
    }
    return r * norm;
}

Mask render_silhouette(const ShapeClass& shape, const Placement& placement, std::size_t resolution) {
    Mask mask{resolution, resolution, std::vector<std::uint8_t>(resolution * resolution, 0)};
    const double res = static_cast<double>(resolution);
    const double cx = placement.center_x * res, cy = placement.center_y * res;
    const double radius = placement.size * res;
    for (std::size_t y = 0; y < resolution; ++y)
        for (std::size_t x = 0; x < resolution; ++x) {
            const double dx = (static_cast<double>(x) + 0.5 - cx) / radius;
            const double dy = (static_cast<double>(y) + 0.5 - cy) / radius;
            const double rho = std::hypot(dx, dy);
            if (rho > 1.0) continue;
            const double theta = std::atan2(dy, dx) - placement.rotation;
            if (rho <= shape.radius(theta)) mask.bits[y * resolution + x] = 1;
        }
    return mask;
}

Image composite(const Mask& mask, const Image& inside, const Image& outside, double figure_ground) {
    if (inside.height != mask.height || inside.width != mask.width || outside.pixels.size() != inside.pixels.size()) {
        throw DimensionError("composite: mask and textures differ in size");
    }
    if (!(figure_ground >= 0.0 && figure_ground < 1.0)) throw ConfigError("figure_ground must lie in [0, 1)");
    const double g = figure_ground;
    Image out = outside;
    for (std::size_t y = 0; y < mask.height; ++y)
        for (std::size_t x = 0; x < mask.width; ++x) {
            const bool in = mask.inside(y, x);
            for (std::size_t c = 0; c < out.channels; ++c) {
                if (in) {
                    out.at(y, x, c) = g + (1.0 - g) * inside.at(y, x, c);
                } else if (g > 0.0) {
                    out.at(y, x, c) = (1.0 - g) * out.at(y, x, c);
                }
            }
        }
    return out;
}

bool ClassDataset::has_stylized_variants() const {
    return std::any_of(classes.begin(), classes.end(), [](const ClassData& c) { return !c.stylized.empty(); });
}

std::size_t ClassDataset::min_images_per_class() const {
    std::size_t m = classes.empty() ? 0 : classes.front().images.size();
    for (const auto& c : classes) m = std::min(m, c.images.size());
    return m;
}

std::vector<std::uint32_t> ClassDataset::class_ids() const {
    std::vector<std::uint32_t> ids;
    for (const auto& c : classes) ids.push_back(c.class_id);
    return ids;
}

std::size_t ClassDataset::resolution() const {
    for (const auto& c : classes) {
        if (!c.images.empty()) return c.images.front().height;
    }
    return 0;
}

namespace {

ClassData generate_class(std::uint32_t class_id, const GeneratorConfig& config, TexturePolicy policy,
                         std::uint64_t fg_texture, std::uint64_t bg_texture) {
    const auto shape = ShapeClass::for_class(class_id, config.seed);
    Rng rng = make_rng(config.seed, class_id);
    ClassData data;
    data.class_id = class_id;
    for (std::size_t i = 0; i < config.images_per_class; ++i) {
        Placement pl;
        pl.size = uniform(rng, 0.28, 0.42);
        const double slack = 0.5 - pl.size;
        pl.center_x = 0.5 + uniform(rng, -slack, slack) * 0.8;
        pl.center_y = 0.5 + uniform(rng, -slack, slack) * 0.8;
        pl.rotation = uniform(rng, -kMaxRotation, kMaxRotation);
        std::uint64_t fg = fg_texture, bg = bg_texture;
        const bool random_texture = policy == TexturePolicy::decorrelated || !bernoulli(rng, config.texture_correlation);
        if (random_texture) {
            fg = uniform_index(rng, config.content_bank_size);
            do {
                bg = uniform_index(rng, config.content_bank_size);
            } while (bg == fg);
        }
        const std::uint64_t fg_seed = rng(), bg_seed = rng();
        auto mask = render_silhouette(shape, pl, config.resolution);
        const double tc = config.texture_contrast;
        const auto inside = render_texture(TextureSpec::from_id(fg).with_contrast(tc), config.resolution,
                                           config.resolution, fg_seed);
        const auto outside = render_texture(TextureSpec::from_id(bg).with_contrast(tc), config.resolution,
                                            config.resolution, bg_seed);
        data.images.push_back(composite(mask, inside, outside, config.figure_ground));
        data.masks.push_back(std::move(mask));
    }
    return data;
}

ClassDataset generate_split(Split split, std::uint32_t first_id, std::size_t n_classes, const GeneratorConfig& config,
                            TexturePolicy policy) {
    ClassDataset ds;
    ds.split = split;
    std::vector<std::uint64_t> bank(config.content_bank_size);
    std::iota(bank.begin(), bank.end(), 0);
    Rng perm_rng = make_rng(config.seed, 0xbad0u + static_cast<std::uint64_t>(split));
    std::shuffle(bank.begin(), bank.end(), perm_rng);
    for (std::size_t k = 0; k < n_classes; ++k) {
        const auto id = static_cast<std::uint32_t>(first_id + k);
        std::uint64_t fg = 0, bg = 0;
        if (policy == TexturePolicy::class_correlated) {
            fg = bank[2 * k];
            bg = bank[2 * k + 1];
        }
        ds.classes.push_back(generate_class(id, config, policy, fg, bg));
    }
    return ds;
}

}  // namespace

GeneratedSplits generate_dataset(const GeneratorConfig& config) {
    if (config.resolution < kMinResolution) {
        throw ConfigError("resolution " + std::to_string(config.resolution) + " is too small to render shapes (minimum " +
                          std::to_string(kMinResolution) + ")");
    }
    if (config.images_per_class == 0) throw ConfigError("images_per_class must be positive");
    if (config.content_bank_size < 2) throw ConfigError("content_bank_size must be at least 2");
    const auto needs_bank = [&](TexturePolicy p, std::size_t n) {
        if (p == TexturePolicy::class_correlated && 2 * n > config.content_bank_size) {
            throw ConfigError("content_bank_size " + std::to_string(config.content_bank_size) +
                              " cannot give distinct texture pairs to " + std::to_string(n) + " classes");
        }
    };
    needs_bank(config.pretrain_policy, config.pretrain_classes);
    needs_bank(config.eval_policy, std::max(config.validation_classes, config.test_classes));

    GeneratedSplits out;
    const auto p = static_cast<std::uint32_t>(config.pretrain_classes);
    const auto v = static_cast<std::uint32_t>(config.validation_classes);
    out.pretrain = generate_split(Split::pretrain, 0, config.pretrain_classes, config, config.pretrain_policy);
    out.validation = generate_split(Split::validation, p, config.validation_classes, config, config.eval_policy);
    out.test = generate_split(Split::test, p + v, config.test_classes, config, config.eval_policy);
    assert_disjoint_classes({&out.pretrain, &out.validation, &out.test});
    return out;
}

Image stylize(const Image& image, const Mask& mask, const TextureSpec& style, double alpha, std::uint64_t seed,
              double figure_ground) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("stylize: alpha must lie in [0, 1]");
    if (mask.height != image.height || mask.width != image.width) throw DimensionError("stylize: mask size differs from image");
    if (alpha == 0.0) return image;

    Rng rng(seed);
    const std::uint64_t background_id = kStyleBankOffset + 1 + uniform_index(rng, 1u << 20);
    const std::uint64_t fg_seed = rng(), bg_seed = rng();
    const auto inside = render_texture(style, image.height, image.width, fg_seed);
    const auto outside = render_texture(TextureSpec::from_id(background_id), image.height, image.width, bg_seed);
    Image restyled = composite(mask, inside, outside, figure_ground);
    if (alpha == 1.0) return restyled;

    Image out = image;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = (1.0 - alpha) * image.pixels[i] + alpha * restyled.pixels[i];
    }
    clamp_unit(out);
    return out;
}

ClassDataset build_stylized_variants(const ClassDataset& dataset, std::size_t n_variants, double alpha,
                                     std::uint64_t seed, std::size_t style_bank_size, double figure_ground) {
    if (dataset.split != Split::pretrain) {
        throw ContractError("stylized variants may only be built for the pretrain split, got " + to_string(dataset.split));
    }
    if (n_variants == 0) return dataset;
    if (style_bank_size == 0) throw ConfigError("style_bank_size must be positive");
    ClassDataset out = dataset;
    for (auto& cls : out.classes) {
        if (cls.masks.size() != cls.images.size()) {
            throw ContractError("class " + std::to_string(cls.class_id) + " has no silhouette masks to stylize");
        }
        cls.stylized.assign(cls.images.size(), {});
        for (std::size_t i = 0; i < cls.images.size(); ++i) {
            Rng rng = make_rng(derive_seed(seed, cls.class_id), i);
            for (std::size_t v = 0; v < n_variants; ++v) {
                const auto style = TextureSpec::from_id(kStyleBankOffset + uniform_index(rng, style_bank_size));
                cls.stylized[i].push_back(stylize(cls.images[i], cls.masks[i], style, alpha, rng(), figure_ground));
            }
        }
    }
    return out;
}

void assert_disjoint_classes(const std::vector<const ClassDataset*>& datasets) {
    for (std::size_t a = 0; a < datasets.size(); ++a)
        for (std::size_t b = a + 1; b < datasets.size(); ++b)
            for (auto id : datasets[a]->class_ids()) {
                const auto other = datasets[b]->class_ids();
                if (std::find(other.begin(), other.end(), id) != other.end()) {
                    throw ContractError("class " + std::to_string(id) + " appears in both the " +
                                        to_string(datasets[a]->split) + " and " + to_string(datasets[b]->split) +
                                        " splits");
                }
            }
}

namespace {

std::array<double, 7> texture_features(const Image& img) {
    std::array<double, 7> f{};
    const double n = static_cast<double>(img.height * img.width);
    for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t y = 0; y < img.height; ++y)
            for (std::size_t x = 0; x < img.width; ++x) {
                const double v = img.at(y, x, c);
                s += v;
                s2 += v * v;
            }
        f[c] = s / n;
        f[3 + c] = std::sqrt(std::max(0.0, s2 / n - f[c] * f[c]));
    }
    double grad = 0.0;
    for (std::size_t y = 0; y + 1 < img.height; ++y)
        for (std::size_t x = 0; x + 1 < img.width; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                grad += std::abs(img.at(y, x + 1, c) - img.at(y, x, c)) + std::abs(img.at(y + 1, x, c) - img.at(y, x, c));
            }
    f[6] = grad / (n * 3.0);
    return f;
}

}  // namespace

double texture_oracle_accuracy(const ClassDataset& dataset) {
    std::vector<std::array<double, 7>> centroids;
    for (const auto& cls : dataset.classes) {
        std::array<double, 7> c{};
        std::size_t count = 0;
        for (std::size_t i = 0; i < cls.images.size(); i += 2, ++count) {
            const auto f = texture_features(cls.images[i]);
            for (std::size_t k = 0; k < 7; ++k) c[k] += f[k];
        }
        for (auto& v : c) v /= static_cast<double>(std::max<std::size_t>(count, 1));
        centroids.push_back(c);
    }
    std::size_t correct = 0, total = 0;
    for (std::size_t label = 0; label < dataset.classes.size(); ++label) {
        const auto& cls = dataset.classes[label];
        for (std::size_t i = 1; i < cls.images.size(); i += 2) {
            const auto f = texture_features(cls.images[i]);
            std::size_t best = 0;
            double best_d = 1e300;
            for (std::size_t k = 0; k < centroids.size(); ++k) {
                double d = 0.0;
                for (std::size_t j = 0; j < 7; ++j) d += (f[j] - centroids[k][j]) * (f[j] - centroids[k][j]);
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            correct += best == label;
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

ShapeSeparability shape_separability(const std::vector<std::uint32_t>& class_ids, std::uint64_t seed,
                                     std::size_t resolution, std::size_t samples) {
    const auto iou = [](const Mask& a, const Mask& b) {
        std::size_t inter = 0, uni = 0;
        for (std::size_t i = 0; i < a.bits.size(); ++i) {
            inter += a.bits[i] & b.bits[i];
            uni += a.bits[i] | b.bits[i];
        }
        return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    };
    const std::size_t n = class_ids.size();
    std::vector<std::vector<Mask>> masks(n);
    Rng rng = make_rng(seed, 0x10u);
    for (std::size_t c = 0; c < n; ++c) {
        const auto shape = ShapeClass::for_class(class_ids[c], seed);
        for (std::size_t s = 0; s < samples; ++s) {
            Placement pl;
            pl.rotation = uniform(rng, -kMaxRotation, kMaxRotation);
            masks[c].push_back(render_silhouette(shape, pl, resolution));
        }
    }
    const auto mean_iou = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < samples; ++i)
            for (std::size_t j = 0; j < samples; ++j) {
                if (a == b && i == j) continue;
                s += iou(masks[a][i], masks[b][j]);
                ++count;
            }
        return s / static_cast<double>(count);
    };
    ShapeSeparability out;
    std::size_t separable = 0, between_pairs = 0;
    for (std::size_t a = 0; a < n; ++a) {
        const double within = mean_iou(a, a);
        out.mean_within_iou += within;
        bool ok = true;
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            const double between = mean_iou(a, b);
            out.mean_between_iou += between;
            ++between_pairs;
            ok = ok && within > between;
        }
        separable += ok;
    }
    out.mean_within_iou /= static_cast<double>(n);
    if (between_pairs) out.mean_between_iou /= static_cast<double>(between_pairs);
    out.separable_fraction = static_cast<double>(separable) / static_cast<double>(n);
    return out;
}

}  // namespace shapeshot
