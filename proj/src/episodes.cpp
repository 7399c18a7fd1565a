#include "shapeshot/episodes.hpp"

#include <algorithm>
#include <numeric>

#include "shapeshot/errors.hpp"

namespace shapeshot {

namespace {

// First `k` entries of a uniformly random permutation of 0..n-1.
std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + uniform_index(rng, n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace

std::vector<std::vector<const Image*>> Episode::support_by_class() const {
    std::vector<std::vector<const Image*>> out(shape.n_way);
    for (const auto& item : support) out[item.label].push_back(item.image);
    return out;
}

Episode sample_episode(const ClassDataset& dataset, const EpisodeShape& shape, Rng& rng) {
    if (shape.n_way == 0 || shape.k_shot == 0) throw ConfigError("episodes need n_way >= 1 and k_shot >= 1");
    if (dataset.classes.size() < shape.n_way) {
        throw SamplingError(to_string(dataset.split) + " split has " + std::to_string(dataset.classes.size()) +
                            " classes but the episode needs " + std::to_string(shape.n_way) + " (short by " +
                            std::to_string(shape.n_way - dataset.classes.size()) + ")");
    }
    const std::size_t per_class = shape.k_shot + shape.q_queries;
    for (const auto& cls : dataset.classes) {
        if (cls.images.size() < per_class) {
            throw SamplingError("class " + std::to_string(cls.class_id) + " has " + std::to_string(cls.images.size()) +
                                " images but the episode needs " + std::to_string(per_class) + " per class (short by " +
                                std::to_string(per_class - cls.images.size()) + ")");
        }
    }

    Episode ep;
    ep.shape = shape;
    ep.source = EpisodeSource::unstylized;
    const auto chosen = draw_without_replacement(dataset.classes.size(), shape.n_way, rng);
    for (std::size_t label = 0; label < shape.n_way; ++label) {
        const auto& cls = dataset.classes[chosen[label]];
        ep.class_ids.push_back(cls.class_id);
        const auto picks = draw_without_replacement(cls.images.size(), per_class, rng);
        for (std::size_t i = 0; i < per_class; ++i) {
            LabeledImage item{&cls.images[picks[i]], label,
                              ImageRef{cls.class_id, static_cast<std::uint32_t>(picks[i]), -1}};
            (i < shape.k_shot ? ep.support : ep.query).push_back(item);
        }
    }
    return ep;
}

Episode sample_pretrain_episode(const ClassDataset& unstylized, const ClassDataset* stylized,
                                const MixtureConfig& mix, const EpisodeShape& shape, Rng& rng) {
    if (!(mix.p >= 0.0 && mix.p <= 1.0)) throw ConfigError("mixture probability p must lie in [0, 1]");
    if (mix.p > 0.0) {
        if (stylized == nullptr || !stylized->has_stylized_variants()) {
            throw ConfigError("mixture probability p > 0 requires a stylized dataset");
        }
        if (stylized->class_ids() != unstylized.class_ids()) {
            throw ContractError("stylized and unstylized datasets must share the same classes");
        }
    }
    const bool use_stylized = bernoulli(rng, mix.p);
    Episode ep = sample_episode(unstylized, shape, rng);
    if (!use_stylized) return ep;

    ep.source = EpisodeSource::stylized;
    const auto swap_in = [&](LabeledImage& item) {
        const auto& cls = *std::find_if(stylized->classes.begin(), stylized->classes.end(),
                                        [&](const ClassData& c) { return c.class_id == item.ref.class_id; });
        const auto& variants = cls.stylized.at(item.ref.image_index);
        if (variants.empty()) {
            throw ContractError("image " + std::to_string(item.ref.image_index) + " of class " +
                                std::to_string(item.ref.class_id) + " has no stylized variants");
        }
        const std::size_t v = uniform_index(rng, variants.size());
        item.image = &variants[v];
        item.ref.variant = static_cast<std::int32_t>(v);
    };
    for (auto& item : ep.support) swap_in(item);
    for (auto& item : ep.query) swap_in(item);
    return ep;
}

}  // namespace shapeshot
