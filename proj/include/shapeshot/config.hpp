#pragma once

// Flat JSON run configuration shared by every CLI subcommand. Unknown keys
// and values of the wrong type are rejected with ConfigError.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shapeshot/harness.hpp"
#include "shapeshot/synthdata.hpp"

namespace shapeshot {

struct RunConfig {
    std::uint64_t seed = 0;

    // dataset
    std::size_t pretrain_classes = 30;
    std::size_t validation_classes = 8;
    std::size_t test_classes = 8;
    std::size_t images_per_class = 60;
    std::size_t resolution = 32;
    std::string pretrain_policy = "class_correlated";
    std::string eval_policy = "decorrelated";
    std::size_t content_bank_size = 64;
    double texture_correlation = 0.5;
    double texture_contrast = 0.4;
    double figure_ground = 0.3;

    // stylization
    double alpha = 0.4;
    std::size_t n_variants = 10;
    std::size_t style_bank_size = 512;

    // episodes and mixture
    std::size_t n_way = 5;
    std::size_t k_shot = 5;
    std::size_t q_queries = 15;
    std::size_t train_q_queries = 0;  // 0: same as q_queries
    double p = 0.0;
    std::vector<double> p_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

    // test-time and train-time augmentation
    std::size_t n_support_aug = 32;
    std::size_t n_query_aug = 32;
    std::size_t train_support_aug = 0;
    std::size_t train_query_aug = 0;
    bool train_augmentation = true;
    double brightness = 0.2;
    double contrast = 0.2;
    double saturation = 0.2;
    double crop_min = 0.7;
    double crop_max = 1.0;

    // classifier and backbone
    double temperature = 32.0;
    std::string metric = "squared_euclidean";
    std::string temperature_mode = "divide";
    std::size_t filters = 32;

    // optimization
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double epsilon = 1e-8;
    std::uint64_t halving_period = 15000;
    std::uint64_t total_steps = 5000;
    std::uint64_t validation_every = 250;
    std::size_t patience = 8;
    std::size_t validation_tasks = 200;

    // evaluation
    std::size_t n_tasks = 2000;
    std::uint64_t eval_seed = 1;

    // paths (relative to the working directory)
    std::string data_dir = "";  // empty: same as out_dir
    std::string out_dir = "out";
    std::string checkpoint = "";  // empty: <out_dir>/checkpoint.pnck
    std::string sweep_csv = "";   // empty: <out_dir>/sweep.csv

    GeneratorConfig generator() const;
    TrainConfig train() const;
    EvalConfig eval() const;
    AugmentationRanges augmentation() const;
    ClassifierConfig classifier() const;

    std::filesystem::path data_path() const { return data_dir.empty() ? out_dir : data_dir; }
    std::filesystem::path checkpoint_path() const;
    std::filesystem::path sweep_csv_path() const;

    // Throws ConfigError on out-of-range values.
    void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Every key with its resolved value, keys sorted, two-space indent.
std::string to_json(const RunConfig& config);

}  // namespace shapeshot
