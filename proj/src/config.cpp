#include "shapeshot/config.hpp"

#include <map>
#include <set>

#include <json.hpp>

#include "shapeshot/errors.hpp"
#include "shapeshot/io.hpp"

namespace shapeshot {

namespace {

using nlohmann::json;

// Calls f(name, member) for every configuration key.
template <typename Config, typename F>
void for_each_field(Config& c, F&& f) {
    f("seed", c.seed);
    f("pretrain_classes", c.pretrain_classes);
    f("validation_classes", c.validation_classes);
    f("test_classes", c.test_classes);
    f("images_per_class", c.images_per_class);
    f("resolution", c.resolution);
    f("pretrain_policy", c.pretrain_policy);
    f("eval_policy", c.eval_policy);
    f("content_bank_size", c.content_bank_size);
    f("texture_correlation", c.texture_correlation);
    f("texture_contrast", c.texture_contrast);
    f("figure_ground", c.figure_ground);
    f("alpha", c.alpha);
    f("n_variants", c.n_variants);
    f("style_bank_size", c.style_bank_size);
    f("n_way", c.n_way);
    f("k_shot", c.k_shot);
    f("q_queries", c.q_queries);
    f("train_q_queries", c.train_q_queries);
    f("p", c.p);
    f("p_values", c.p_values);
    f("n_support_aug", c.n_support_aug);
    f("n_query_aug", c.n_query_aug);
    f("train_support_aug", c.train_support_aug);
    f("train_query_aug", c.train_query_aug);
    f("train_augmentation", c.train_augmentation);
    f("brightness", c.brightness);
    f("contrast", c.contrast);
    f("saturation", c.saturation);
    f("crop_min", c.crop_min);
    f("crop_max", c.crop_max);
    f("temperature", c.temperature);
    f("metric", c.metric);
    f("temperature_mode", c.temperature_mode);
    f("filters", c.filters);
    f("lr", c.lr);
    f("beta1", c.beta1);
    f("beta2", c.beta2);
    f("epsilon", c.epsilon);
    f("halving_period", c.halving_period);
    f("total_steps", c.total_steps);
    f("validation_every", c.validation_every);
    f("patience", c.patience);
    f("validation_tasks", c.validation_tasks);
    f("n_tasks", c.n_tasks);
    f("eval_seed", c.eval_seed);
    f("data_dir", c.data_dir);
    f("out_dir", c.out_dir);
    f("checkpoint", c.checkpoint);
    f("sweep_csv", c.sweep_csv);
}

template <typename T>
void read_value(const json& j, const std::string& key, T& out) {
    if constexpr (std::is_same_v<T, std::string>) {
        if (!j.is_string()) throw ConfigError("config key '" + key + "' must be a string");
        out = j.get<std::string>();
    } else if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean()) throw ConfigError("config key '" + key + "' must be true or false");
        out = j.get<bool>();
    } else if constexpr (std::is_same_v<T, double>) {
        if (!j.is_number()) throw ConfigError("config key '" + key + "' must be a number");
        out = j.get<double>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!j.is_array()) throw ConfigError("config key '" + key + "' must be an array of numbers");
        out.clear();
        for (const auto& v : j) {
            if (!v.is_number()) throw ConfigError("config key '" + key + "' must be an array of numbers");
            out.push_back(v.get<double>());
        }
    } else {
        if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
            throw ConfigError("config key '" + key + "' must be a non-negative integer");
        }
        out = static_cast<T>(j.get<std::uint64_t>());
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig config;
    std::set<std::string> known;
    for_each_field(config, [&](const char* name, auto& member) {
        known.insert(name);
        if (auto it = doc.find(name); it != doc.end()) read_value(*it, name, member);
    });
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    config.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
    return parse_run_config(read_text(path));
}

std::string to_json(const RunConfig& config) {
    // nlohmann's default object type is an ordered std::map, so keys come out sorted.
    json doc = json::object();
    for_each_field(config, [&](const char* name, const auto& member) { doc[name] = member; });
    return doc.dump(2) + "\n";
}

void RunConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    texture_policy_from_string(pretrain_policy);
    texture_policy_from_string(eval_policy);
    metric_from_string(metric);
    temperature_mode_from_string(temperature_mode);
    require(resolution >= kMinResolution, "resolution must be at least " + std::to_string(kMinResolution));
    require(pretrain_classes >= 1 && validation_classes >= 1 && test_classes >= 1, "every split needs a class");
    require(texture_correlation >= 0.0 && texture_correlation <= 1.0, "texture_correlation must lie in [0, 1]");
    require(texture_contrast >= 0.0 && texture_contrast <= 1.0, "texture_contrast must lie in [0, 1]");
    require(figure_ground >= 0.0 && figure_ground < 1.0, "figure_ground must lie in [0, 1)");
    require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
    require(p >= 0.0 && p <= 1.0, "p must lie in [0, 1]");
    require(!p_values.empty(), "p_values must not be empty");
    for (double v : p_values) require(v >= 0.0 && v <= 1.0, "p_values must lie in [0, 1]");
    require(n_way >= 2 && k_shot >= 1 && q_queries >= 1, "episodes need n_way >= 2, k_shot >= 1, q_queries >= 1");
    require(brightness >= 0.0 && contrast >= 0.0 && contrast <= 1.0 && saturation >= 0.0 && saturation <= 1.0,
            "jitter ranges must be non-negative and contrast/saturation at most 1");
    require(crop_min > 0.0 && crop_min <= crop_max && crop_max <= 1.0, "crop range must satisfy 0 < min <= max <= 1");
    require(temperature > 0.0, "temperature must be positive");
    require(filters >= 1, "filters must be positive");
    require(lr > 0.0 && beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0,
            "optimizer settings out of range");
    require(halving_period >= 1, "halving_period must be positive");
    require(n_tasks >= 1, "n_tasks must be positive");
    require(!out_dir.empty(), "out_dir must not be empty");
    train().validate();
}

AugmentationRanges RunConfig::augmentation() const {
    AugmentationRanges r;
    r.brightness = brightness;
    r.contrast = contrast;
    r.saturation = saturation;
    r.min_crop = crop_min;
    r.max_crop = crop_max;
    return r;
}

ClassifierConfig RunConfig::classifier() const {
    return {temperature, metric_from_string(metric), temperature_mode_from_string(temperature_mode)};
}

GeneratorConfig RunConfig::generator() const {
    GeneratorConfig g;
    g.pretrain_classes = pretrain_classes;
    g.validation_classes = validation_classes;
    g.test_classes = test_classes;
    g.images_per_class = images_per_class;
    g.resolution = resolution;
    g.pretrain_policy = texture_policy_from_string(pretrain_policy);
    g.eval_policy = texture_policy_from_string(eval_policy);
    g.content_bank_size = content_bank_size;
    g.texture_correlation = texture_correlation;
    g.texture_contrast = texture_contrast;
    g.figure_ground = figure_ground;
    g.seed = seed;
    return g;
}

TrainConfig RunConfig::train() const {
    TrainConfig t;
    t.total_steps = total_steps;
    t.validation_every = validation_every;
    t.patience = patience;
    t.validation_tasks = validation_tasks;
    t.seed = seed;
    t.episode = {n_way, k_shot, train_q_queries ? train_q_queries : q_queries};
    t.mixture.p = p;
    t.schedule = {lr, halving_period};
    t.optimizer = {lr, beta1, beta2, epsilon};
    t.tta = {train_support_aug, train_query_aug};
    t.augment_episodes = train_augmentation;
    t.classifier = classifier();
    t.backbone = {filters, 3, resolution};
    t.augmentation = augmentation();
    return t;
}

EvalConfig RunConfig::eval() const {
    EvalConfig e;
    e.n_tasks = n_tasks;
    e.episode = {n_way, k_shot, q_queries};
    e.tta = {n_support_aug, n_query_aug};
    e.classifier = classifier();
    e.augmentation = augmentation();
    e.seed = eval_seed;
    return e;
}

std::filesystem::path RunConfig::checkpoint_path() const {
    return checkpoint.empty() ? std::filesystem::path(out_dir) / "checkpoint.pnck" : std::filesystem::path(checkpoint);
}

std::filesystem::path RunConfig::sweep_csv_path() const {
    return sweep_csv.empty() ? std::filesystem::path(out_dir) / "sweep.csv" : std::filesystem::path(sweep_csv);
}

}  // namespace shapeshot
