#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "shapeshot/cli.hpp"
#include "shapeshot/config.hpp"
#include "shapeshot/errors.hpp"
#include "shapeshot/harness.hpp"
#include "shapeshot/io.hpp"
#include "shapeshot/report.hpp"

namespace py = pybind11;
using namespace shapeshot;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const Image& img) {
    Array a({img.height, img.width, img.channels});
    std::copy(img.pixels.begin(), img.pixels.end(), a.mutable_data());
    return a;
}

Image to_image(const Array& a) {
    if (a.ndim() != 3) throw DimensionError("expected an H x W x C array");
    Image img(a.shape(0), a.shape(1), a.shape(2));
    std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
    return img;
}

Array to_array(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    Array a(shape);
    std::copy(t.values().begin(), t.values().end(), a.mutable_data());
    return a;
}

Tensor to_tensor(const Array& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor::from(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Mask to_mask(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw DimensionError("expected an H x W mask");
    return Mask{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                std::vector<std::uint8_t>(a.data(), a.data() + a.size())};
}

const ClassData& class_at(const ClassDataset& ds, std::size_t index) {
    if (index >= ds.classes.size()) throw py::index_error("class index out of range");
    return ds.classes[index];
}

Checkpoint checkpoint_from(const TrainResult& r) { return Checkpoint{r.best.backbone.snapshot(), r.best.training_class_ids}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Prototype-network few-shot experiments on a synthetic shape/texture benchmark";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<ContractError>(m, "ContractError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<SamplingError>(m, "SamplingError", base.ptr());
    py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());

    m.def("version", &version_string);

    py::enum_<Split>(m, "Split")
        .value("pretrain", Split::pretrain)
        .value("validation", Split::validation)
        .value("test", Split::test);

    py::class_<ClassDataset>(m, "ClassDataset")
        .def_readonly("split", &ClassDataset::split)
        .def_property_readonly("n_classes", [](const ClassDataset& d) { return d.classes.size(); })
        .def_property_readonly("resolution", &ClassDataset::resolution)
        .def_property_readonly("has_stylized_variants", &ClassDataset::has_stylized_variants)
        .def("class_ids", &ClassDataset::class_ids)
        .def("images", [](const ClassDataset& d, std::size_t k) {
            std::vector<Array> out;
            for (const auto& img : class_at(d, k).images) out.push_back(to_array(img));
            return out;
        })
        .def("masks", [](const ClassDataset& d, std::size_t k) {
            std::vector<py::array_t<std::uint8_t>> out;
            for (const auto& mask : class_at(d, k).masks) {
                py::array_t<std::uint8_t> a({mask.height, mask.width});
                std::copy(mask.bits.begin(), mask.bits.end(), a.mutable_data());
                out.push_back(a);
            }
            return out;
        })
        .def("stylized", [](const ClassDataset& d, std::size_t k, std::size_t i) {
            const auto& c = class_at(d, k);
            std::vector<Array> out;
            if (i < c.stylized.size())
                for (const auto& img : c.stylized[i]) out.push_back(to_array(img));
            return out;
        })
        .def(py::self == py::self);

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_static("from_json", &parse_run_config, py::arg("text"))
        .def_static("load", [](const std::filesystem::path& p) { return load_run_config(p); })
        .def("to_json", [](const RunConfig& c) { return to_json(c); })
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("resolution", &RunConfig::resolution)
        .def_readwrite("filters", &RunConfig::filters)
        .def_readwrite("p", &RunConfig::p)
        .def_readwrite("n_tasks", &RunConfig::n_tasks)
        .def_readwrite("n_support_aug", &RunConfig::n_support_aug)
        .def_readwrite("n_query_aug", &RunConfig::n_query_aug)
        .def_readwrite("total_steps", &RunConfig::total_steps)
        .def_readwrite("temperature", &RunConfig::temperature)
        .def("validate", &RunConfig::validate);

    m.def(
        "generate_dataset",
        [](const RunConfig& c) {
            auto s = generate_dataset(c.generator());
            py::dict d;
            d["pretrain"] = std::move(s.pretrain);
            d["validation"] = std::move(s.validation);
            d["test"] = std::move(s.test);
            return d;
        },
        py::arg("config"));
    m.def(
        "build_stylized_variants",
        [](const ClassDataset& ds, const RunConfig& c, std::uint64_t seed) {
            return build_stylized_variants(ds, c.n_variants, c.alpha, seed, c.style_bank_size, c.figure_ground);
        },
        py::arg("dataset"), py::arg("config"), py::arg("seed"));
    m.def(
        "stylize",
        [](const Array& image, const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask,
           std::uint64_t style_id, double alpha, std::uint64_t seed) {
            return to_array(stylize(to_image(image), to_mask(mask), TextureSpec::from_id(kStyleBankOffset + style_id),
                                    alpha, seed));
        },
        py::arg("image"), py::arg("mask"), py::arg("style_id"), py::arg("alpha"), py::arg("seed"));

    py::class_<AugmentationSpec>(m, "AugmentationSpec")
        .def(py::init<>())
        .def_readwrite("flip", &AugmentationSpec::flip)
        .def_readwrite("brightness_delta", &AugmentationSpec::brightness_delta)
        .def_readwrite("contrast_factor", &AugmentationSpec::contrast_factor)
        .def_readwrite("saturation_factor", &AugmentationSpec::saturation_factor)
        .def_readwrite("crop_fraction", &AugmentationSpec::crop_fraction)
        .def_readwrite("crop_offset_x", &AugmentationSpec::crop_offset_x)
        .def_readwrite("crop_offset_y", &AugmentationSpec::crop_offset_y)
        .def(py::self == py::self);
    m.def(
        "sample_augmentation",
        [](std::uint64_t seed) {
            Rng rng(seed);
            return sample_augmentation(rng);
        },
        py::arg("seed"));
    m.def(
        "augment", [](const AugmentationSpec& spec, const Array& image) { return to_array(apply(spec, to_image(image))); },
        py::arg("spec"), py::arg("image"));

    py::class_<ConvBackbone>(m, "ConvBackbone")
        .def(py::init([](std::size_t filters, std::size_t resolution, std::uint64_t seed) {
                 return ConvBackbone({filters, 3, resolution}, seed);
             }),
             py::arg("filters"), py::arg("resolution"), py::arg("seed"))
        .def_property_readonly("embedding_dim", &ConvBackbone::embedding_dim)
        .def_property_readonly("parameter_count", &ConvBackbone::parameter_count)
        .def("embed", [](const ConvBackbone& net, const Array& batch) {
            NoGradGuard guard;
            return to_array(net.embed(to_tensor(batch)));
        });

    py::class_<Checkpoint>(m, "Checkpoint")
        .def_property_readonly("backbone", [](const Checkpoint& c) { return c.backbone.snapshot(); })
        .def_readonly("training_class_ids", &Checkpoint::training_class_ids)
        .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(p, c.to_tensors()); })
        .def_static("load", [](const std::filesystem::path& p) { return Checkpoint::from_tensors(load_checkpoint(p)); });

    py::class_<TrainResult>(m, "TrainResult")
        .def_property_readonly("checkpoint", &checkpoint_from)
        .def_readonly("best_step", &TrainResult::best_step)
        .def_readonly("best_validation_accuracy", &TrainResult::best_validation_accuracy)
        .def_readonly("steps_run", &TrainResult::steps_run)
        .def_readonly("stopped_early", &TrainResult::stopped_early)
        .def_property_readonly("losses", [](const TrainResult& r) {
            std::vector<double> out;
            for (const auto& s : r.log) out.push_back(s.loss);
            return out;
        });

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("per_task_accuracy", &EvalReport::per_task_accuracy)
        .def_readonly("mean_accuracy", &EvalReport::mean_accuracy)
        .def_readonly("ci95_halfwidth", &EvalReport::ci95_halfwidth)
        .def_property_readonly("n_tasks", &EvalReport::n_tasks)
        .def("csv", [](const EvalReport& r) { return eval_csv(r); });

    m.def(
        "train",
        [](const RunConfig& c, const ClassDataset& pretrain, const ClassDataset* stylized, const ClassDataset& validation) {
            py::gil_scoped_release release;
            return train(c.train(), pretrain, stylized, validation);
        },
        py::arg("config"), py::arg("pretrain"), py::arg("stylized"), py::arg("validation"));
    m.def(
        "evaluate",
        [](const Checkpoint& ckpt, const ClassDataset& test, const RunConfig& c, std::size_t workers) {
            py::gil_scoped_release release;
            return evaluate(ckpt, test, c.eval(), workers);
        },
        py::arg("checkpoint"), py::arg("test"), py::arg("config"), py::arg("workers") = 1);
    m.def(
        "summarize",
        [](const std::vector<double>& v) {
            const auto s = summarize(v);
            return py::make_tuple(s.mean, s.ci95);
        },
        py::arg("values"));
    m.def(
        "probabilities",
        [](const Array& distances, double temperature) {
            ClassifierConfig cfg;
            cfg.temperature = temperature;
            return to_array(probabilities_from_distances(to_tensor(distances), cfg));
        },
        py::arg("distances"), py::arg("temperature") = 32.0);

    m.def("save_dataset", [](const std::filesystem::path& p, const ClassDataset& d) { save_dataset(p, d); });
    m.def("load_dataset", [](const std::filesystem::path& p) { return load_dataset(p); });

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = cli_dispatch(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
