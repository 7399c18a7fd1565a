#pragma once

#include <cstdint>
#include <vector>

#include "shapeshot/rng.hpp"
#include "shapeshot/synthdata.hpp"

namespace shapeshot {

enum class EpisodeSource : std::uint8_t { unstylized = 0, stylized = 1 };

// Identity of an image inside a dataset; variant is -1 for the original.
struct ImageRef {
    std::uint32_t class_id = 0;
    std::uint32_t image_index = 0;
    std::int32_t variant = -1;
    bool operator==(const ImageRef&) const = default;
};

// Episodes point into the dataset they were sampled from; the dataset must
// outlive them.
struct LabeledImage {
    const Image* image = nullptr;
    std::size_t label = 0;  // 0 .. n_way-1
    ImageRef ref;
};

struct EpisodeShape {
    std::size_t n_way = 5;
    std::size_t k_shot = 5;
    std::size_t q_queries = 15;
};

struct Episode {
    EpisodeShape shape;
    std::vector<LabeledImage> support;  // class-major, k_shot per class
    std::vector<LabeledImage> query;    // class-major, q_queries per class
    std::vector<std::uint32_t> class_ids;  // class_ids[label] = dataset class id
    EpisodeSource source = EpisodeSource::unstylized;

    std::vector<std::vector<const Image*>> support_by_class() const;
};

struct MixtureConfig {
    double p = 0.0;  // probability that a pre-training episode is stylized
};

// Classes uniformly without replacement, then per class a uniform draw of
// k_shot + q_queries distinct images: the first k_shot go to the support set.
// Throws SamplingError when the dataset is too small.
Episode sample_episode(const ClassDataset& dataset, const EpisodeShape& shape, Rng& rng);

// One Bernoulli(p) draw picks the source for the whole episode. A stylized
// episode has the same structure as an unstylized one, with every image
// swapped for one of its variants chosen uniformly. `stylized` may be null
// when p == 0.
Episode sample_pretrain_episode(const ClassDataset& unstylized, const ClassDataset* stylized,
                                const MixtureConfig& mix, const EpisodeShape& shape, Rng& rng);

}  // namespace shapeshot
