#include "shapeshot/nn.hpp"

#include <algorithm>
#include <cmath>

#include "shapeshot/errors.hpp"
#include "shapeshot/ops.hpp"
#include "shapeshot/rng.hpp"

namespace shapeshot {

namespace {

void validate_config(const BackboneConfig& config) {
    if (config.filters == 0 || config.in_channels == 0) throw ConfigError("backbone filters and channels must be positive");
    if (config.resolution < (std::size_t{1} << ConvBackbone::kBlocks)) {
        throw ConfigError("backbone resolution " + std::to_string(config.resolution) + " is below " +
                          std::to_string(std::size_t{1} << ConvBackbone::kBlocks));
    }
}

}  // namespace

std::vector<std::pair<std::string, Shape>> ConvBackbone::parameter_layout(const BackboneConfig& config) {
    std::vector<std::pair<std::string, Shape>> layout;
    std::size_t in = config.in_channels;
    for (std::size_t b = 0; b < kBlocks; ++b) {
        const std::string prefix = "block" + std::to_string(b);
        layout.emplace_back(prefix + ".weight", Shape{config.filters, in, 3, 3});
        layout.emplace_back(prefix + ".bias", Shape{config.filters});
        in = config.filters;
    }
    return layout;
}

ConvBackbone::ConvBackbone(BackboneConfig config, std::uint64_t seed) : config_(config) {
    validate_config(config_);
    Rng rng(seed);
    for (auto& [name, shape] : parameter_layout(config_)) {
        auto t = Tensor::zeros(shape, true);
        if (shape.size() == 4) {
            const double fan_in = static_cast<double>(shape[1] * shape[2] * shape[3]);
            const double fan_out = static_cast<double>(shape[0] * shape[2] * shape[3]);
            const double s = std::sqrt(6.0 / (fan_in + fan_out));
            for (auto& v : t.mutable_values()) v = uniform(rng, -s, s);
        }
        params_.push_back({name, t});
    }
}

ConvBackbone::ConvBackbone(BackboneConfig config, std::vector<NamedParameter> parameters) : config_(config) {
    validate_config(config_);
    const auto layout = parameter_layout(config_);
    if (parameters.size() != layout.size()) {
        throw DimensionError("backbone expects " + std::to_string(layout.size()) + " parameter tensors, got " +
                             std::to_string(parameters.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (parameters[i].name != layout[i].first || parameters[i].tensor.shape() != layout[i].second) {
            throw DimensionError("backbone parameter " + std::to_string(i) + " is " + parameters[i].name + " " +
                                 shape_to_string(parameters[i].tensor.shape()) + ", expected " + layout[i].first +
                                 " " + shape_to_string(layout[i].second));
        }
        parameters[i].tensor.set_requires_grad(true);
    }
    params_ = std::move(parameters);
}

Tensor ConvBackbone::embed(const Tensor& batch) const {
    if (batch.rank() != 4 || batch.dim(1) != config_.in_channels || batch.dim(2) != config_.resolution ||
        batch.dim(3) != config_.resolution) {
        throw DimensionError("embed: batch " + shape_to_string(batch.shape()) + " does not match " +
                             std::to_string(config_.in_channels) + "x" + std::to_string(config_.resolution) + "x" +
                             std::to_string(config_.resolution));
    }
    Tensor x = batch;
    for (std::size_t b = 0; b < kBlocks; ++b) {
        x = conv2d(x, params_[2 * b].tensor, 1, 1);
        x = add_channel_bias(x, params_[2 * b + 1].tensor);
        x = max_pool2x2(relu(x));
    }
    return global_avg_pool(x);
}

std::size_t ConvBackbone::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.numel();
    return n;
}

void ConvBackbone::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

ConvBackbone ConvBackbone::snapshot() const {
    std::vector<NamedParameter> copy;
    copy.reserve(params_.size());
    for (const auto& p : params_) copy.push_back({p.name, p.tensor.detach()});
    return ConvBackbone(config_, std::move(copy));
}

void Adam::step(std::span<NamedParameter> params) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.tensor.numel(), 0.0);
            v_.emplace_back(p.tensor.numel(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw ContractError("Adam::step called with a different parameter list");
    for (const auto& p : params) {
        if (!p.tensor.has_grad()) continue;
        for (double g : p.tensor.grad()) {
            if (!std::isfinite(g)) throw TrainingError("non-finite gradient in parameter " + p.name);
        }
    }

    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double bc1 = 1.0 - std::pow(config_.beta1, t);
    const double bc2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].tensor;
        const bool has_grad = p.has_grad();
        const auto grad = p.grad();
        auto values = p.mutable_values();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < values.size(); ++j) {
            const double g = has_grad ? grad[j] : 0.0;
            m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g;
            v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g * g;
            if (config_.lr == 0.0) continue;
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            values[j] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

double LrSchedule::lr_at(std::uint64_t step) const {
    if (halving_period == 0) throw ConfigError("halving period must be positive");
    const auto halvings = step / halving_period;
    return std::ldexp(initial_lr, -static_cast<int>(std::min<std::uint64_t>(halvings, 2000)));
}

}  // namespace shapeshot
