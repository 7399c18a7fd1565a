#include "shapeshot/harness.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "shapeshot/errors.hpp"

namespace shapeshot {

namespace {

// Stream ids under the training seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEpisodeStream = 2;
constexpr std::uint64_t kValidationStream = 3;
constexpr std::uint64_t kAugmentStream = 4;

const std::string kResolutionKey = "meta.resolution";
const std::string kClassIdsKey = "meta.training_class_ids";

std::vector<std::uint32_t> concat_ids(const ClassDataset& a, const ClassDataset& b) {
    auto ids = a.class_ids();
    const auto more = b.class_ids();
    ids.insert(ids.end(), more.begin(), more.end());
    std::sort(ids.begin(), ids.end());
    return ids;
}

// The augmented copies live in `storage`, which must outlive the episode.
void augment_episode(Episode& episode, const AugmentationRanges& ranges, Rng& rng, std::vector<Image>& storage) {
    storage.clear();
    storage.reserve(episode.support.size() + episode.query.size());
    for (auto* images : {&episode.support, &episode.query}) {
        for (auto& li : *images) {
            storage.push_back(apply(sample_augmentation(rng, ranges), *li.image));
            li.image = &storage.back();
        }
    }
}

double episode_accuracy_for_task(const Embedder& embedder, const ClassDataset& test, const EvalConfig& config,
                                 std::size_t task) {
    const std::uint64_t task_seed = derive_seed(config.seed, task);
    Rng episode_rng = make_rng(task_seed, 0);
    Rng augment_rng = make_rng(task_seed, 1);
    const Episode episode = sample_episode(test, config.episode, episode_rng);
    const RandomAugmenter augmenter(config.augmentation);
    return episode_accuracy(episode, embedder, config.tta, config.classifier, augmenter, augment_rng);
}

}  // namespace

void TrainConfig::validate() const {
    if (total_steps == 0) throw ConfigError("total_steps must be positive");
    if (validation_every == 0 || validation_every > total_steps) {
        throw ConfigError("validation_every must be in [1, total_steps]");
    }
    if (patience < 1) throw ConfigError("patience must be at least 1");
    if (validation_tasks == 0) throw ConfigError("validation_tasks must be positive");
    if (!(mixture.p >= 0.0 && mixture.p <= 1.0)) throw ConfigError("mixture p must lie in [0, 1]");
    if (episode.n_way < 2 || episode.k_shot < 1 || episode.q_queries < 1) {
        throw ConfigError("episodes need n_way >= 2, k_shot >= 1 and q_queries >= 1");
    }
    if (!(schedule.initial_lr > 0.0) || schedule.halving_period == 0) {
        throw ConfigError("schedule needs a positive initial lr and halving period");
    }
    if (!(classifier.temperature > 0.0)) throw ConfigError("temperature must be positive");
}

std::vector<NamedParameter> Checkpoint::to_tensors() const {
    std::vector<NamedParameter> out;
    for (const auto& p : backbone.parameters()) out.push_back({p.name, p.tensor.detach()});
    out.push_back({kResolutionKey, Tensor::scalar(static_cast<double>(backbone.config().resolution))});
    std::vector<double> ids(training_class_ids.begin(), training_class_ids.end());
    if (ids.empty()) ids.push_back(-1.0);  // tensors cannot be empty
    const auto n = ids.size();
    out.push_back({kClassIdsKey, Tensor::from({n}, std::move(ids))});
    return out;
}

Checkpoint Checkpoint::from_tensors(std::vector<NamedParameter> tensors) {
    std::optional<std::size_t> resolution;
    std::vector<std::uint32_t> ids;
    std::vector<NamedParameter> params;
    for (auto& t : tensors) {
        if (t.name == kResolutionKey) {
            resolution = static_cast<std::size_t>(t.tensor.item());
        } else if (t.name == kClassIdsKey) {
            for (double v : t.tensor.values())
                if (v >= 0.0) ids.push_back(static_cast<std::uint32_t>(v));
        } else {
            params.push_back(std::move(t));
        }
    }
    if (!resolution) throw FormatError("checkpoint lacks " + kResolutionKey);
    if (params.empty() || params.front().tensor.rank() != 4) {
        throw FormatError("checkpoint does not start with a convolution kernel");
    }
    BackboneConfig config;
    config.filters = params.front().tensor.dim(0);
    config.in_channels = params.front().tensor.dim(1);
    config.resolution = *resolution;
    for (auto& p : params) p.tensor.set_requires_grad(true);
    try {
        return Checkpoint{ConvBackbone(config, std::move(params)), std::move(ids)};
    } catch (const DimensionError& e) {
        throw FormatError(std::string("checkpoint parameters do not form a backbone: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint parameters do not form a backbone: ") + e.what());
    }
}

TrainResult train(const TrainConfig& config, const ClassDataset& unstylized, const ClassDataset* stylized,
                  const ClassDataset& validation) {
    config.validate();
    if (validation.classes.empty()) throw ContractError("validation split is empty");
    if (validation.has_stylized_variants()) throw ContractError("validation split must be unstylized");
    if (unstylized.resolution() != config.backbone.resolution) {
        throw ConfigError("dataset resolution " + std::to_string(unstylized.resolution()) +
                          " does not match backbone resolution " + std::to_string(config.backbone.resolution));
    }
    assert_disjoint_classes({&unstylized, &validation});

    ConvBackbone model(config.backbone, derive_seed(config.seed, kInitStream));
    Adam adam(config.optimizer);
    Rng rng = make_rng(config.seed, kEpisodeStream);
    Rng augment_rng = make_rng(config.seed, kAugmentStream);
    std::vector<Image> augmented;
    const RandomAugmenter augmenter(config.augmentation);
    const BackboneEmbedder embedder(model);

    EvalConfig val;
    val.n_tasks = config.validation_tasks;
    val.episode = config.episode;
    val.tta = TtaConfig::off();
    val.classifier = config.classifier;
    val.seed = derive_seed(config.seed, kValidationStream);

    const auto ids = concat_ids(unstylized, validation);
    TrainResult result{Checkpoint{model.snapshot(), ids}, 0, 0.0, 0, false, {}, {}};
    std::size_t rounds_without_improvement = 0;
    bool have_best = false;

    auto validate_now = [&](std::uint64_t step) {
        const double acc = evaluate(embedder, validation, val).mean_accuracy;
        result.validations.push_back({step, acc});
        if (!have_best || acc > result.best_validation_accuracy) {
            have_best = true;
            result.best_validation_accuracy = acc;
            result.best_step = step;
            result.best = Checkpoint{model.snapshot(), ids};
            rounds_without_improvement = 0;
        } else {
            ++rounds_without_improvement;
        }
    };

    validate_now(0);
    for (std::uint64_t step = 0; step < config.total_steps; ++step) {
        const double lr = config.schedule.lr_at(step);
        Episode episode = sample_pretrain_episode(unstylized, stylized, config.mixture, config.episode, rng);
        if (config.augment_episodes) augment_episode(episode, config.augmentation, augment_rng, augmented);
        double loss_value = 0.0;
        try {
            const Tensor loss = episodic_loss(episode, embedder, config.tta, config.classifier, augmenter, rng);
            loss_value = loss.item();
            model.zero_grad();
            loss.backward();
            adam.set_lr(lr);
            adam.step(model.parameters());
        } catch (const NumericError& e) {
            throw TrainingError("non-finite value at step " + std::to_string(step) + " (lr " + std::to_string(lr) +
                                "): " + e.what());
        } catch (const TrainingError& e) {
            throw TrainingError("step " + std::to_string(step) + " (lr " + std::to_string(lr) + "): " + e.what());
        }
        result.log.push_back({step, loss_value, lr, episode.source});
        result.steps_run = step + 1;
        if (result.steps_run % config.validation_every == 0 || result.steps_run == config.total_steps) {
            validate_now(result.steps_run);
            if (rounds_without_improvement >= config.patience) {
                result.stopped_early = result.steps_run < config.total_steps;
                break;
            }
        }
    }
    return result;
}

Summary summarize(const std::vector<double>& values) {
    if (values.empty()) throw ContractError("cannot summarize an empty sample");
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    Summary s;
    s.mean = sum / n;
    if (values.size() < 2) return s;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return s;
}

Summary paired_difference(const EvalReport& a, const EvalReport& b) {
    if (a.n_tasks() != b.n_tasks()) throw ContractError("paired reports must have the same number of tasks");
    std::vector<double> diff(a.n_tasks());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.per_task_accuracy[i] - b.per_task_accuracy[i];
    return summarize(diff);
}

EvalReport evaluate(const Embedder& embedder, const ClassDataset& test, const EvalConfig& config, std::size_t workers) {
    if (config.n_tasks == 0) throw ConfigError("n_tasks must be positive");
    EvalReport report;
    report.config = config;
    report.per_task_accuracy.assign(config.n_tasks, 0.0);
    workers = std::clamp<std::size_t>(workers, 1, config.n_tasks);

    if (workers == 1) {
        for (std::size_t t = 0; t < config.n_tasks; ++t)
            report.per_task_accuracy[t] = episode_accuracy_for_task(embedder, test, config, t);
    } else {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    for (std::size_t t = w; t < config.n_tasks; t += workers)
                        report.per_task_accuracy[t] = episode_accuracy_for_task(embedder, test, config, t);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& th : threads) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    const auto s = summarize(report.per_task_accuracy);
    report.mean_accuracy = s.mean;
    report.ci95_halfwidth = s.ci95;
    return report;
}

EvalReport evaluate(const Checkpoint& checkpoint, const ClassDataset& test, const EvalConfig& config,
                    std::size_t workers) {
    for (auto id : test.class_ids()) {
        if (std::binary_search(checkpoint.training_class_ids.begin(), checkpoint.training_class_ids.end(), id)) {
            throw ContractError("test class " + std::to_string(id) + " was used in training");
        }
    }
    const BackboneEmbedder embedder(checkpoint.backbone);
    return evaluate(embedder, test, config, workers);
}

std::string to_string(TrainingSource source) {
    switch (source) {
        case TrainingSource::unstylized: return "unstylized";
        case TrainingSource::stylized: return "stylized";
        case TrainingSource::mixture: return "mixture";
    }
    return "?";
}

const AblationCell& AblationResult::cell(TrainingSource source, bool support_tta, bool query_tta) const {
    for (const auto& c : cells)
        if (c.source == source && c.support_tta == support_tta && c.query_tta == query_tta) return c;
    throw ContractError("no ablation cell for " + to_string(source));
}

std::vector<AblationCell> evaluate_ablation(const std::vector<const TrainResult*>& models,
                                            const std::vector<double>& ps, const EvalConfig& eval,
                                            const ClassDataset& test, std::size_t workers) {
    const TrainingSource sources[] = {TrainingSource::unstylized, TrainingSource::stylized, TrainingSource::mixture};
    if (models.size() != 3 || ps.size() != 3) throw ContractError("ablation needs exactly three models");
    std::vector<AblationCell> cells;
    for (std::size_t m = 0; m < 3; ++m)
        for (bool support : {false, true})
            for (bool query : {false, true}) {
                EvalConfig cfg = eval;
                cfg.tta.n_support_aug = support ? eval.tta.n_support_aug : 0;
                cfg.tta.n_query_aug = query ? eval.tta.n_query_aug : 0;
                cells.push_back({sources[m], ps[m], support, query, evaluate(models[m]->best, test, cfg, workers)});
            }
    return cells;
}

AblationResult run_ablation(const AblationConfig& config, const ClassDataset& unstylized,
                            const ClassDataset& stylized, const ClassDataset& validation, const ClassDataset& test,
                            std::size_t workers) {
    const std::vector<double> ps = {0.0, 1.0, config.mixture_p};
    AblationResult result;
    for (double p : ps) {
        TrainConfig cfg = config.train;
        cfg.mixture.p = p;
        result.models.push_back(train(cfg, unstylized, p > 0.0 ? &stylized : nullptr, validation));
    }
    std::vector<const TrainResult*> models;
    for (const auto& m : result.models) models.push_back(&m);
    result.cells = evaluate_ablation(models, ps, config.eval, test, workers);
    return result;
}

SweepResult run_p_sweep(const std::vector<double>& ps, const TrainConfig& train_config, const EvalConfig& eval,
                        const ClassDataset& unstylized, const ClassDataset& stylized, const ClassDataset& validation,
                        const ClassDataset& test, std::size_t workers) {
    if (ps.empty()) throw ConfigError("sweep needs at least one p value");
    SweepResult result;
    for (double p : ps) {
        TrainConfig cfg = train_config;
        cfg.mixture.p = p;
        result.models.push_back(train(cfg, unstylized, p > 0.0 ? &stylized : nullptr, validation));
        result.points.push_back({p, evaluate(result.models.back().best, test, eval, workers)});
    }
    return result;
}

}  // namespace shapeshot
