#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shapeshot/tensor.hpp"

namespace shapeshot {

struct NamedParameter {
    std::string name;
    Tensor tensor;
};

struct BackboneConfig {
    std::size_t filters = 32;  // x in Conv-x; also the embedding size
    std::size_t in_channels = 3;
    std::size_t resolution = 32;
};

// Conv-x embedding network: four blocks of (3x3 conv, pad 1) -> bias -> ReLU
// -> 2x2 max-pool, followed by global average pooling to an x-dimensional
// embedding.
class ConvBackbone {
public:
    static constexpr std::size_t kBlocks = 4;

    // Glorot-uniform kernels, zero biases.
    ConvBackbone(BackboneConfig config, std::uint64_t seed);
    // Takes ownership of existing tensors (checkpoint restore); names and
    // shapes must match the layout the first constructor produces.
    ConvBackbone(BackboneConfig config, std::vector<NamedParameter> parameters);

    // [N, C, H, W] -> [N, filters]. Throws DimensionError if the batch does
    // not match the configured channels and resolution.
    Tensor embed(const Tensor& batch) const;

    const BackboneConfig& config() const { return config_; }
    std::size_t embedding_dim() const { return config_.filters; }
    std::size_t parameter_count() const;

    std::vector<NamedParameter>& parameters() { return params_; }
    const std::vector<NamedParameter>& parameters() const { return params_; }
    void zero_grad();

    // Deep copy with fresh storage, detached from any graph.
    ConvBackbone snapshot() const;

    static std::vector<std::pair<std::string, Shape>> parameter_layout(const BackboneConfig& config);

private:
    BackboneConfig config_;
    std::vector<NamedParameter> params_;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double epsilon = 1e-8;
};

// Bias-corrected Adam. Moments are allocated lazily on the first step and
// keyed by parameter position, so the same parameter list must be passed on
// every step.
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    void set_lr(double lr) { config_.lr = lr; }
    double lr() const { return config_.lr; }
    const AdamConfig& config() const { return config_; }
    std::uint64_t step_count() const { return step_count_; }

    // Applies one update from the parameters' grads (missing grad = zero).
    // Throws TrainingError naming the first parameter with a non-finite grad;
    // in that case nothing is modified.
    void step(std::span<NamedParameter> params);

    const std::vector<std::vector<double>>& first_moment() const { return m_; }
    const std::vector<std::vector<double>>& second_moment() const { return v_; }

private:
    AdamConfig config_;
    std::uint64_t step_count_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

struct LrSchedule {
    double initial_lr = 1e-4;
    std::uint64_t halving_period = 15000;

    // initial_lr / 2^floor(step / halving_period)
    double lr_at(std::uint64_t step) const;
};

}  // namespace shapeshot
