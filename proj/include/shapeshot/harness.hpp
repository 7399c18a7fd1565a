#pragma once

// Pre-training with early stopping, test-time evaluation with confidence
// intervals, and the ablation and mixture-sweep experiment runners.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shapeshot/augment.hpp"
#include "shapeshot/episodes.hpp"
#include "shapeshot/nn.hpp"
#include "shapeshot/protonet.hpp"
#include "shapeshot/synthdata.hpp"

namespace shapeshot {

struct TrainConfig {
    std::uint64_t total_steps = 5000;
    std::uint64_t validation_every = 250;
    std::size_t patience = 8;
    std::size_t validation_tasks = 200;
    std::uint64_t seed = 0;
    EpisodeShape episode{};
    MixtureConfig mixture{};
    LrSchedule schedule{};
    AdamConfig optimizer{};
    TtaConfig tta = TtaConfig::off();
    // Every episode image is replaced by one random augmentation of itself.
    bool augment_episodes = true;
    ClassifierConfig classifier{};
    BackboneConfig backbone{};
    AugmentationRanges augmentation{};

    // Throws ConfigError when an invariant is violated.
    void validate() const;
};

// A trained embedding network plus the class ids it saw during training.
struct Checkpoint {
    ConvBackbone backbone;
    std::vector<std::uint32_t> training_class_ids;

    // Parameters followed by "meta.resolution" and "meta.training_class_ids".
    std::vector<NamedParameter> to_tensors() const;
    static Checkpoint from_tensors(std::vector<NamedParameter> tensors);
};

struct TrainStep {
    std::uint64_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
    EpisodeSource source = EpisodeSource::unstylized;
};

struct ValidationPoint {
    std::uint64_t step = 0;  // number of optimizer steps taken before validating
    double accuracy = 0.0;
};

struct TrainResult {
    Checkpoint best;
    std::uint64_t best_step = 0;
    double best_validation_accuracy = 0.0;
    std::uint64_t steps_run = 0;
    bool stopped_early = false;
    std::vector<TrainStep> log;
    std::vector<ValidationPoint> validations;
};

// `stylized` may be null when the mixture probability is 0. Throws
// TrainingError on a non-finite loss or gradient.
TrainResult train(const TrainConfig& config, const ClassDataset& unstylized, const ClassDataset* stylized,
                  const ClassDataset& validation);

struct EvalConfig {
    std::size_t n_tasks = 2000;
    EpisodeShape episode{};
    TtaConfig tta{};
    ClassifierConfig classifier{};
    AugmentationRanges augmentation{};
    std::uint64_t seed = 0;
};

struct EvalReport {
    std::vector<double> per_task_accuracy;
    double mean_accuracy = 0.0;
    double ci95_halfwidth = 0.0;
    EvalConfig config{};

    std::size_t n_tasks() const { return per_task_accuracy.size(); }
};

struct Summary {
    double mean = 0.0;
    double ci95 = 0.0;  // 1.96 * sample std (n - 1) / sqrt(n); 0 for n = 1
};

Summary summarize(const std::vector<double>& values);

// Mean and ci95 of the task-wise differences a - b.
Summary paired_difference(const EvalReport& a, const EvalReport& b);

// Task t draws its episode and its augmentations from streams derived from
// (seed, t), so the result does not depend on `workers`, and two configs
// that differ only in TTA see the same episodes.
EvalReport evaluate(const Embedder& embedder, const ClassDataset& test, const EvalConfig& config,
                    std::size_t workers = 1);

// Asserts that the test classes were not seen in training.
EvalReport evaluate(const Checkpoint& checkpoint, const ClassDataset& test, const EvalConfig& config,
                    std::size_t workers = 1);

enum class TrainingSource { unstylized, stylized, mixture };
std::string to_string(TrainingSource source);

struct AblationCell {
    TrainingSource source = TrainingSource::unstylized;
    double p = 0.0;
    bool support_tta = false;
    bool query_tta = false;
    EvalReport report;
};

struct AblationConfig {
    TrainConfig train{};
    double mixture_p = 0.3;
    EvalConfig eval{};  // eval.tta holds the replica counts used when a TTA switch is on
};

struct AblationResult {
    std::vector<TrainResult> models;  // unstylized, stylized, mixture
    std::vector<AblationCell> cells;  // source-major, then support TTA, then query TTA

    const AblationCell& cell(TrainingSource source, bool support_tta, bool query_tta) const;
};

AblationResult run_ablation(const AblationConfig& config, const ClassDataset& unstylized,
                            const ClassDataset& stylized, const ClassDataset& validation, const ClassDataset& test,
                            std::size_t workers = 1);

// Evaluates already trained models (same order as AblationResult::models).
std::vector<AblationCell> evaluate_ablation(const std::vector<const TrainResult*>& models,
                                            const std::vector<double>& ps, const EvalConfig& eval,
                                            const ClassDataset& test, std::size_t workers = 1);

struct SweepPoint {
    double p = 0.0;
    EvalReport report;
};

struct SweepResult {
    std::vector<TrainResult> models;
    std::vector<SweepPoint> points;
};

SweepResult run_p_sweep(const std::vector<double>& ps, const TrainConfig& train_config, const EvalConfig& eval,
                        const ClassDataset& unstylized, const ClassDataset& stylized, const ClassDataset& validation,
                        const ClassDataset& test, std::size_t workers = 1);

}  // namespace shapeshot
