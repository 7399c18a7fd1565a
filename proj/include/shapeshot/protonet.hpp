#pragma once

// Prototype classification with support and query test-time augmentation.
//
//   prototype   c_k = mean over x in S_k of { f(x), f(a_1 x), ..., f(a_Ns x) }
//   distance    d(x, c_k) = mean of m(f(x), c_k), m(f(a_1 x), c_k), ..., m(f(a_Nq x), c_k)
//   probability p(k | x) = softmax_k(-d(x, c_k) / tau)
//
// Every (image, replica) pair gets its own augmentation draw. A query's
// augmented copies are drawn once and shared by all prototypes.

#include <memory>
#include <span>
#include <vector>

#include "shapeshot/augment.hpp"
#include "shapeshot/episodes.hpp"
#include "shapeshot/image.hpp"
#include "shapeshot/nn.hpp"
#include "shapeshot/tensor.hpp"

namespace shapeshot {

enum class Metric { squared_euclidean, euclidean };
enum class TemperatureMode { divide, multiply };

std::string to_string(Metric metric);
Metric metric_from_string(const std::string& name);
std::string to_string(TemperatureMode mode);
TemperatureMode temperature_mode_from_string(const std::string& name);

struct TtaConfig {
    std::size_t n_support_aug = 32;
    std::size_t n_query_aug = 32;

    static TtaConfig off() { return {0, 0}; }
};

struct ClassifierConfig {
    double temperature = 32.0;
    Metric metric = Metric::squared_euclidean;
    // divide: logits = -d / tau; multiply: logits = -tau * d.
    TemperatureMode temperature_mode = TemperatureMode::divide;
};

// Maps a batch of images to an [N, D] embedding tensor.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual Tensor embed(std::span<const Image* const> images) const = 0;
};

class BackboneEmbedder final : public Embedder {
public:
    // Without gradient recording, batches are embedded in chunks of this size
    // to bound activation memory.
    static constexpr std::size_t kInferenceChunk = 64;

    explicit BackboneEmbedder(const ConvBackbone& backbone) : backbone_(backbone) {}
    Tensor embed(std::span<const Image* const> images) const override;

private:
    const ConvBackbone& backbone_;
};

// The augmentation draw f_a used for TTA replicas.
class Augmenter {
public:
    virtual ~Augmenter() = default;
    virtual Image augment(const Image& image, Rng& rng) const = 0;
};

class RandomAugmenter final : public Augmenter {
public:
    explicit RandomAugmenter(AugmentationRanges ranges = {}) : ranges_(ranges) {}
    Image augment(const Image& image, Rng& rng) const override { return apply(sample_augmentation(rng, ranges_), image); }

private:
    AugmentationRanges ranges_;
};

class IdentityAugmenter final : public Augmenter {
public:
    Image augment(const Image& image, Rng&) const override { return image; }
};

struct PrototypeSet {
    Tensor prototypes;  // [n_way, D]
    ClassifierConfig config;

    std::size_t n_way() const { return prototypes.dim(0); }
    std::size_t dim() const { return prototypes.dim(1); }
};

// support[k] lists the images of class k. Throws ContractError on an empty
// class.
PrototypeSet compute_prototypes(const std::vector<std::vector<const Image*>>& support, const Embedder& embedder,
                                std::size_t n_support_aug, const Augmenter& augmenter, Rng& rng,
                                const ClassifierConfig& config = {});

// m(e_i, c_k) for every row: [N, D] x [K, D] -> [N, K].
Tensor metric_distances(const Tensor& embeddings, const Tensor& prototypes, Metric metric);

// Averages consecutive blocks of `replicas` rows: [Q*replicas, K] -> [Q, K].
Tensor average_replicas(const Tensor& per_replica, std::size_t replicas);

// Augmented distances from each query to every prototype: [Q, K].
Tensor query_distances(std::span<const Image* const> queries, const PrototypeSet& protos, const Embedder& embedder,
                       std::size_t n_query_aug, const Augmenter& augmenter, Rng& rng);

// d(query, c_k) for a single query and prototype index.
double distance(const Image& query, const PrototypeSet& protos, std::size_t k, const Embedder& embedder,
                std::size_t n_query_aug, const Augmenter& augmenter, Rng& rng);

Tensor distance_logits(const Tensor& distances, const ClassifierConfig& config);

// Class probabilities from a [Q, K] (or [K]) distance tensor.
Tensor probabilities_from_distances(const Tensor& distances, const ClassifierConfig& config);

// Probability vector over the n_way classes for one query.
std::vector<double> classify(const Image& query, const PrototypeSet& protos, const Embedder& embedder,
                             std::size_t n_query_aug, const Augmenter& augmenter, Rng& rng);

// Mean negative log-likelihood of the true labels over all queries.
Tensor episodic_loss(const Episode& episode, const Embedder& embedder, const TtaConfig& tta,
                     const ClassifierConfig& classifier, const Augmenter& augmenter, Rng& rng);

// Fraction of the episode's queries whose argmax class is correct.
double episode_accuracy(const Episode& episode, const Embedder& embedder, const TtaConfig& tta,
                        const ClassifierConfig& classifier, const Augmenter& augmenter, Rng& rng);

}  // namespace shapeshot
