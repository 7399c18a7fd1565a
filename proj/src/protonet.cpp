#include "shapeshot/protonet.hpp"

#include <algorithm>

#include "shapeshot/errors.hpp"
#include "shapeshot/ops.hpp"

namespace shapeshot {

std::string to_string(Metric metric) {
    return metric == Metric::squared_euclidean ? "squared_euclidean" : "euclidean";
}

Metric metric_from_string(const std::string& name) {
    if (name == "squared_euclidean") return Metric::squared_euclidean;
    if (name == "euclidean") return Metric::euclidean;
    throw ConfigError("unknown metric '" + name + "'");
}

std::string to_string(TemperatureMode mode) { return mode == TemperatureMode::divide ? "divide" : "multiply"; }

TemperatureMode temperature_mode_from_string(const std::string& name) {
    if (name == "divide") return TemperatureMode::divide;
    if (name == "multiply") return TemperatureMode::multiply;
    throw ConfigError("unknown temperature mode '" + name + "'");
}

Tensor BackboneEmbedder::embed(std::span<const Image* const> images) const {
    if (grad_mode_enabled() || images.size() <= kInferenceChunk) return backbone_.embed(images_to_batch(images));
    std::vector<double> values;
    values.reserve(images.size() * backbone_.embedding_dim());
    for (std::size_t start = 0; start < images.size(); start += kInferenceChunk) {
        const auto chunk = images.subspan(start, std::min(kInferenceChunk, images.size() - start));
        const auto e = backbone_.embed(images_to_batch(chunk));
        values.insert(values.end(), e.values().begin(), e.values().end());
    }
    return Tensor::from({images.size(), backbone_.embedding_dim()}, std::move(values));
}

namespace {

// Lays out each image followed by its `replicas` augmented copies.
struct ReplicaBatch {
    std::vector<Image> augmented;
    std::vector<const Image*> order;

    ReplicaBatch(std::span<const Image* const> images, std::size_t replicas, const Augmenter& augmenter, Rng& rng) {
        augmented.reserve(images.size() * replicas);
        order.reserve(images.size() * (replicas + 1));
        for (const Image* img : images) {
            order.push_back(img);
            for (std::size_t r = 0; r < replicas; ++r) {
                augmented.push_back(augmenter.augment(*img, rng));
                order.push_back(&augmented.back());
            }
        }
    }
};

}  // namespace

PrototypeSet compute_prototypes(const std::vector<std::vector<const Image*>>& support, const Embedder& embedder,
                                std::size_t n_support_aug, const Augmenter& augmenter, Rng& rng,
                                const ClassifierConfig& config) {
    if (support.empty()) throw ContractError("compute_prototypes: no classes");
    std::vector<const Image*> flat;
    std::vector<std::size_t> group_sizes;
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (support[k].empty()) throw ContractError("compute_prototypes: class " + std::to_string(k) + " has no support images");
        flat.insert(flat.end(), support[k].begin(), support[k].end());
        group_sizes.push_back(support[k].size() * (1 + n_support_aug));
    }
    ReplicaBatch batch(flat, n_support_aug, augmenter, rng);
    const Tensor embeddings = embedder.embed(batch.order);
    return PrototypeSet{group_mean(embeddings, group_sizes), config};
}

Tensor metric_distances(const Tensor& embeddings, const Tensor& prototypes, Metric metric) {
    Tensor d = pairwise_sq_dist(embeddings, prototypes);
    return metric == Metric::euclidean ? sqrt(d) : d;
}

Tensor average_replicas(const Tensor& per_replica, std::size_t replicas) {
    if (per_replica.rank() != 2 || replicas == 0 || per_replica.dim(0) % replicas != 0) {
        throw DimensionError("average_replicas: " + shape_to_string(per_replica.shape()) + " is not a whole number of " +
                             std::to_string(replicas) + "-row blocks");
    }
    return group_mean(per_replica, std::vector<std::size_t>(per_replica.dim(0) / replicas, replicas));
}

Tensor query_distances(std::span<const Image* const> queries, const PrototypeSet& protos, const Embedder& embedder,
                       std::size_t n_query_aug, const Augmenter& augmenter, Rng& rng) {
    ReplicaBatch batch(queries, n_query_aug, augmenter, rng);
    const Tensor embeddings = embedder.embed(batch.order);
    return average_replicas(metric_distances(embeddings, protos.prototypes, protos.config.metric), 1 + n_query_aug);
}

double distance(const Image& query, const PrototypeSet& protos, std::size_t k, const Embedder& embedder,
                std::size_t n_query_aug, const Augmenter& augmenter, Rng& rng) {
    if (k >= protos.n_way()) throw ContractError("distance: prototype index out of range");
    const Image* q = &query;
    const Tensor d = query_distances(std::span<const Image* const>(&q, 1), protos, embedder, n_query_aug, augmenter, rng);
    return d.at(k);
}

Tensor distance_logits(const Tensor& distances, const ClassifierConfig& config) {
    if (!(config.temperature > 0.0)) throw ConfigError("temperature must be positive");
    const double factor = config.temperature_mode == TemperatureMode::divide ? -1.0 / config.temperature
                                                                             : -config.temperature;
    return scale(distances, factor);
}

Tensor probabilities_from_distances(const Tensor& distances, const ClassifierConfig& config) {
    return softmax(distance_logits(distances, config));
}

std::vector<double> classify(const Image& query, const PrototypeSet& protos, const Embedder& embedder,
                             std::size_t n_query_aug, const Augmenter& augmenter, Rng& rng) {
    const Image* q = &query;
    const Tensor d = query_distances(std::span<const Image* const>(&q, 1), protos, embedder, n_query_aug, augmenter, rng);
    const Tensor p = probabilities_from_distances(reshape(d, {protos.n_way()}), protos.config);
    return {p.values().begin(), p.values().end()};
}

namespace {

struct EpisodeForward {
    Tensor distances;  // [Q, n_way]
    std::vector<std::size_t> labels;
};

EpisodeForward forward_episode(const Episode& episode, const Embedder& embedder, const TtaConfig& tta,
                               const ClassifierConfig& classifier, const Augmenter& augmenter, Rng& rng) {
    if (episode.query.empty()) throw ContractError("episode has no queries");
    const auto protos = compute_prototypes(episode.support_by_class(), embedder, tta.n_support_aug, augmenter, rng,
                                           classifier);
    std::vector<const Image*> queries;
    std::vector<std::size_t> labels;
    for (const auto& item : episode.query) {
        queries.push_back(item.image);
        labels.push_back(item.label);
    }
    return {query_distances(queries, protos, embedder, tta.n_query_aug, augmenter, rng), std::move(labels)};
}

}  // namespace

Tensor episodic_loss(const Episode& episode, const Embedder& embedder, const TtaConfig& tta,
                     const ClassifierConfig& classifier, const Augmenter& augmenter, Rng& rng) {
    const auto fwd = forward_episode(episode, embedder, tta, classifier, augmenter, rng);
    const Tensor log_p = log_softmax(distance_logits(fwd.distances, classifier));
    return scale(mean(pick(log_p, fwd.labels)), -1.0);
}

double episode_accuracy(const Episode& episode, const Embedder& embedder, const TtaConfig& tta,
                        const ClassifierConfig& classifier, const Augmenter& augmenter, Rng& rng) {
    NoGradGuard no_grad;
    const auto fwd = forward_episode(episode, embedder, tta, classifier, augmenter, rng);
    // Softmax is monotone in -d, so the argmax is the nearest prototype.
    const std::size_t k = fwd.distances.dim(1);
    const auto d = fwd.distances.values();
    std::size_t correct = 0;
    for (std::size_t q = 0; q < fwd.labels.size(); ++q) {
        const auto row = d.subspan(q * k, k);
        const auto best = static_cast<std::size_t>(std::min_element(row.begin(), row.end()) - row.begin());
        correct += best == fwd.labels[q];
    }
    return static_cast<double>(correct) / static_cast<double>(fwd.labels.size());
}

}  // namespace shapeshot
