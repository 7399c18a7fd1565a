#include "shapeshot/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "shapeshot/config.hpp"
#include "shapeshot/errors.hpp"
#include "shapeshot/io.hpp"
#include "shapeshot/report.hpp"

namespace shapeshot {

namespace fs = std::filesystem;

std::size_t worker_count() {
    const char* env = std::getenv(kWorkersEnv);
    if (env == nullptr || *env == '\0') return std::max(1u, std::thread::hardware_concurrency());
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError(std::string(kWorkersEnv) + " must be a positive integer, got '" + env + "'");
    return static_cast<std::size_t>(v);
}

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> tasks;
    std::optional<double> p;
    bool no_support_tta = false;
    bool no_query_tta = false;
};

struct Context {
    RunConfig config;
    std::string command;
    std::ostream& out;
};

RunConfig resolve(const Overrides& o) {
    RunConfig c = load_run_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    if (o.out) c.out_dir = *o.out;
    if (o.tasks) c.n_tasks = *o.tasks;
    if (o.p) {
        c.p = *o.p;
        c.p_values = {*o.p};
    }
    if (o.no_support_tta) c.n_support_aug = 0;
    if (o.no_query_tta) c.n_query_aug = 0;
    c.validate();
    return c;
}

void write_meta(const Context& ctx, const fs::path& artifact) {
    nlohmann::json meta;
    meta["artifact"] = artifact.filename().string();
    meta["command"] = ctx.command;
    meta["version"] = version_string();
    meta["config"] = nlohmann::json::parse(to_json(ctx.config));
    write_text(artifact.string() + ".meta.json", meta.dump(2) + "\n");
}

void emit_text(const Context& ctx, const fs::path& path, const std::string& text) {
    write_text(path, text);
    write_meta(ctx, path);
}

fs::path out_path(const Context& ctx, const std::string& name) { return fs::path(ctx.config.out_dir) / name; }

ClassDataset load_split(const Context& ctx, const std::string& name) {
    return load_dataset(ctx.config.data_path() / (name + ".fsds"));
}

// Stream ids under the run seed.
constexpr std::uint64_t kStylizeStream = 11;

void cmd_generate(const Context& ctx) {
    const auto& c = ctx.config;
    const auto splits = generate_dataset(c.generator());
    const std::pair<const char*, const ClassDataset*> files[] = {
        {"pretrain", &splits.pretrain}, {"validation", &splits.validation}, {"test", &splits.test}};
    for (const auto& [name, ds] : files) {
        const auto path = out_path(ctx, std::string(name) + ".fsds");
        save_dataset(path, *ds);
        write_meta(ctx, path);
    }
    ctx.out << "generated " << c.pretrain_classes << "/" << c.validation_classes << "/" << c.test_classes
            << " classes x " << c.images_per_class << " images at " << c.resolution << "x" << c.resolution << " in "
            << c.out_dir << "\n";
}

void cmd_stylize(const Context& ctx) {
    const auto& c = ctx.config;
    const auto pretrain = load_split(ctx, "pretrain");
    const auto stylized = build_stylized_variants(pretrain, c.n_variants, c.alpha, derive_seed(c.seed, kStylizeStream),
                                                  c.style_bank_size, c.figure_ground);
    const auto path = out_path(ctx, "pretrain_stylized.fsds");
    save_dataset(path, stylized);
    write_meta(ctx, path);
    ctx.out << "stylized " << pretrain.classes.size() << " classes with " << c.n_variants << " variants per image (alpha "
            << format_number(c.alpha) << ") -> " << path.string() << "\n";
}

struct TrainingData {
    ClassDataset pretrain;
    std::optional<ClassDataset> stylized;
    ClassDataset validation;
};

TrainingData load_training_data(const Context& ctx, bool need_stylized) {
    TrainingData d{load_split(ctx, "pretrain"), std::nullopt, load_split(ctx, "validation")};
    if (need_stylized) d.stylized = load_split(ctx, "pretrain_stylized");
    return d;
}

void save_training_outputs(const Context& ctx, const TrainResult& r, const fs::path& checkpoint, const std::string& tag) {
    save_checkpoint(checkpoint, r.best.to_tensors());
    write_meta(ctx, checkpoint);
    emit_text(ctx, out_path(ctx, "train_log" + tag + ".csv"), train_log_csv(r));
    emit_text(ctx, out_path(ctx, "validation" + tag + ".csv"), validation_csv(r));
}

void cmd_train(const Context& ctx) {
    const auto& c = ctx.config;
    const auto data = load_training_data(ctx, c.p > 0.0);
    const auto result = train(c.train(), data.pretrain, data.stylized ? &*data.stylized : nullptr, data.validation);
    const auto path = c.checkpoint_path();
    save_training_outputs(ctx, result, path, "");
    char acc[32];
    std::snprintf(acc, sizeof acc, "%.3f", result.best_validation_accuracy);
    ctx.out << "trained " << result.steps_run << " steps, best validation accuracy " << acc << " at step "
            << result.best_step << " -> " << path.string() << "\n";
}

void cmd_eval(const Context& ctx) {
    const auto& c = ctx.config;
    const auto checkpoint = Checkpoint::from_tensors(load_checkpoint(c.checkpoint_path()));
    const auto test = load_split(ctx, "test");
    const auto report = evaluate(checkpoint, test, c.eval(), worker_count());
    emit_text(ctx, out_path(ctx, "eval.txt"), eval_text(report));
    emit_text(ctx, out_path(ctx, "eval.csv"), eval_csv(report));
    char line[96];
    std::snprintf(line, sizeof line, "mean accuracy %.3f +- %.3f over %zu tasks\n", report.mean_accuracy,
                  report.ci95_halfwidth, report.n_tasks());
    ctx.out << line;
}

void cmd_ablate(const Context& ctx) {
    const auto& c = ctx.config;
    if (!(c.p > 0.0 && c.p < 1.0)) throw ConfigError("ablate needs a mixture probability p strictly between 0 and 1");
    const auto data = load_training_data(ctx, true);
    const auto test = load_split(ctx, "test");
    AblationConfig ac{c.train(), c.p, c.eval()};
    const auto result = run_ablation(ac, data.pretrain, *data.stylized, data.validation, test, worker_count());
    const char* tags[] = {"_unstylized", "_stylized", "_mixture"};
    for (std::size_t m = 0; m < result.models.size(); ++m) {
        save_training_outputs(ctx, result.models[m], out_path(ctx, std::string("checkpoint") + tags[m] + ".pnck"), tags[m]);
    }
    emit_text(ctx, out_path(ctx, "ablation.txt"), ablation_text(result.cells));
    emit_text(ctx, out_path(ctx, "ablation.csv"), ablation_csv(result.cells));
    const auto& best = *std::max_element(result.cells.begin(), result.cells.end(), [](const auto& a, const auto& b) {
        return a.report.mean_accuracy < b.report.mean_accuracy;
    });
    char line[160];
    std::snprintf(line, sizeof line, "ablation: %zu cells, best %s (support TTA %s, query TTA %s) %.3f +- %.3f\n",
                  result.cells.size(), to_string(best.source).c_str(), best.support_tta ? "on" : "off",
                  best.query_tta ? "on" : "off", best.report.mean_accuracy, best.report.ci95_halfwidth);
    ctx.out << line;
}

void cmd_sweep(const Context& ctx) {
    const auto& c = ctx.config;
    const bool any_stylized = std::any_of(c.p_values.begin(), c.p_values.end(), [](double p) { return p > 0.0; });
    const auto data = load_training_data(ctx, any_stylized);
    const auto test = load_split(ctx, "test");
    const ClassDataset& stylized = data.stylized ? *data.stylized : data.pretrain;
    const auto result = run_p_sweep(c.p_values, c.train(), c.eval(), data.pretrain, stylized, data.validation, test,
                                    worker_count());
    emit_text(ctx, out_path(ctx, "sweep.csv"), sweep_csv(result.points));
    emit_text(ctx, out_path(ctx, "sweep.txt"), sweep_text(result.points));
    emit_text(ctx, out_path(ctx, "sweep.svg"), sweep_svg(curve_of(result.points)));
    const auto& best = *std::max_element(result.points.begin(), result.points.end(), [](const auto& a, const auto& b) {
        return a.report.mean_accuracy < b.report.mean_accuracy;
    });
    char line[128];
    std::snprintf(line, sizeof line, "sweep: %zu points, best p = %s at %.3f +- %.3f\n", result.points.size(),
                  format_number(best.p).c_str(), best.report.mean_accuracy, best.report.ci95_halfwidth);
    ctx.out << line;
}

void cmd_plot(const Context& ctx) {
    const auto src = ctx.config.sweep_csv_path();
    const auto curve = parse_sweep_csv(read_text(src));
    const auto path = out_path(ctx, "sweep.svg");
    emit_text(ctx, path, sweep_svg(curve));
    ctx.out << "plotted " << curve.size() << " points from " << src.string() << " -> " << path.string() << "\n";
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Few-shot prototype classification experiments on a synthetic shape/texture benchmark", "shapeshot"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string());

    Overrides o;
    using Runner = void (*)(const Context&);
    const std::pair<const char*, std::pair<const char*, Runner>> commands[] = {
        {"generate-data", {"Render the pretrain, validation and test splits", cmd_generate}},
        {"stylize", {"Add stylized variants to the pretrain split", cmd_stylize}},
        {"train", {"Pre-train an embedding network with early stopping", cmd_train}},
        {"eval", {"Evaluate a checkpoint on test episodes", cmd_eval}},
        {"ablate", {"Training source x support TTA x query TTA grid", cmd_ablate}},
        {"sweep-p", {"Test accuracy versus stylized episode probability", cmd_sweep}},
        {"plot", {"Render a sweep CSV as an SVG line plot", cmd_plot}},
    };
    for (const auto& [name, info] : commands) {
        auto* sub = app.add_subcommand(name, info.first);
        sub->add_option("--config", o.config_path, "Run configuration (JSON)")->required();
        sub->add_option("--seed", o.seed, "Override the run seed");
        sub->add_option("--out", o.out, "Override the output directory");
        sub->add_option("--tasks", o.tasks, "Override the number of evaluation tasks")->check(CLI::PositiveNumber);
        sub->add_option("--p", o.p, "Override the mixture probability (and the sweep values)")->check(CLI::Range(0.0, 1.0));
        sub->add_flag("--no-support-tta", o.no_support_tta, "Disable support-set augmentation at test time");
        sub->add_flag("--no-query-tta", o.no_query_tta, "Disable query augmentation at test time");
    }

    std::vector<std::string> argv_storage = {"shapeshot"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << version_string() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    const auto* chosen = app.get_subcommands().front();
    Runner runner = nullptr;
    for (const auto& [name, info] : commands)
        if (chosen->get_name() == name) runner = info.second;

    try {
        Context ctx{resolve(o), chosen->get_name(), out};
        runner(ctx);
        return kExitOk;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TrainingError& e) {
        err << "error: " << e.what() << "\n";
        return kExitTraining;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitContract;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace shapeshot
