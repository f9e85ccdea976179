#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "facecloak/container.hpp"
#include "facecloak/error.hpp"
#include "facecloak/eval.hpp"
#include "facecloak/focusing.hpp"
#include "facecloak/image_io.hpp"
#include "facecloak/metrics.hpp"
#include "facecloak/optimizer.hpp"
#include "facecloak/synthgen.hpp"
#include "facecloak/toy_backend.hpp"
#include "facecloak/transforms.hpp"

namespace py = pybind11;
using namespace facecloak;

namespace {

ImagePlane plane_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& array) {
    if (array.ndim() != 3 || array.shape(2) != 3) {
        throw py::value_error("image array must have shape (H, W, 3)");
    }
    const int height = static_cast<int>(array.shape(0));
    const int width = static_cast<int>(array.shape(1));
    std::vector<double> data(array.data(), array.data() + array.size());
    return ImagePlane(height, width, std::move(data));
}

py::array_t<double> array_from_plane(const ImagePlane& image) {
    py::array_t<double> out({image.height(), image.width(), 3});
    std::copy(image.data().begin(), image.data().end(), out.mutable_data());
    return out;
}

py::array_t<double> array_from_vector(const std::vector<double>& values, int height, int width) {
    py::array_t<double> out({height, width, 3});
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

template <typename T>
py::array_t<T> array_from_flat(const std::vector<T>& values, int height, int width) {
    py::array_t<T> out({height, width, 3});
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_facecloak, m) {
    m.doc() = "Identity-specific face cloaking: embedding backends, variant "
              "generation, projected sign-gradient cloak optimization and the "
              "identification/verification evaluation protocol.";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(PyExc_RuntimeError,
                            (std::string("[") + to_string(e.kind()) + "/" + e.stage() + "] " +
                             e.what())
                                .c_str());
        }
    });

    py::class_<BackendDescriptor>(m, "BackendDescriptor")
        .def_readonly("backend_id", &BackendDescriptor::backend_id)
        .def_readonly("input_height", &BackendDescriptor::input_height)
        .def_readonly("input_width", &BackendDescriptor::input_width)
        .def_readonly("embedding_dim", &BackendDescriptor::embedding_dim)
        .def_readonly("differentiable", &BackendDescriptor::differentiable);

    py::class_<ToyBackend>(m, "ToyBackend")
        .def(py::init([](int input_height, int input_width, std::uint64_t seed) {
                 return ToyBackend(random_toy_weights(input_height, input_width, seed));
             }),
             py::arg("input_height"), py::arg("input_width"), py::arg("seed") = 1)
        .def_static("load", [](const std::filesystem::path& path) {
            return ToyBackend(load_toy_weights(path));
        })
        .def("save", [](const ToyBackend& b, const std::filesystem::path& path) {
            save_toy_weights(b.weights(), path);
        })
        .def_property_readonly("descriptor", &ToyBackend::descriptor)
        .def("embed", [](const ToyBackend& b, const py::array_t<double>& image) {
            const Embedding e = b.embed(plane_from_array(image));
            return py::array_t<double>(py::cast(e.values()));
        });

    m.def(
        "train_toy_backend",
        [](const std::vector<std::pair<std::string, py::array_t<double>>>& dataset, int epochs,
           std::uint64_t seed, double accuracy_floor) {
            std::vector<LabeledImage> items;
            items.reserve(dataset.size());
            for (const auto& [label, array] : dataset) {
                items.push_back({make_identity(label), plane_from_array(array)});
            }
            ToyTrainConfig cfg;
            cfg.epochs = epochs;
            cfg.seed = seed;
            cfg.accuracy_floor = accuracy_floor;
            return ToyBackend(train_toy_backend(items, cfg));
        },
        py::arg("dataset"), py::arg("epochs") = 30, py::arg("seed") = 1,
        py::arg("accuracy_floor") = 0.9,
        "Train the small convolutional embedding backend on (label, HxWx3 float) pairs.");

    py::class_<CloakMask>(m, "CloakMask")
        .def_property_readonly("height", &CloakMask::height)
        .def_property_readonly("width", &CloakMask::width)
        .def_property_readonly("backend_id", &CloakMask::backend_id)
        .def_property_readonly("seed_identity_hash", &CloakMask::seed_identity_hash)
        .def_property_readonly("config_digest", &CloakMask::config_digest)
        .def_property_readonly(
            "delta", [](const CloakMask& c) { return array_from_flat(c.delta(), c.height(), c.width()); })
        .def_property_readonly("attention",
                               [](const CloakMask& c) {
                                   return array_from_flat(c.attention(), c.height(), c.width());
                               })
        .def_property_readonly("budget", [](const CloakMask& c) {
            return array_from_flat(c.budget().values(), c.height(), c.width());
        });

    m.def("save_cloak", [](const CloakMask& cloak, const std::filesystem::path& path) {
        save_cloak(cloak, path);
    });
    m.def("load_cloak", [](const std::filesystem::path& path) { return load_cloak(path); });

    m.def(
        "generate_variants",
        [](const py::array_t<double>& seed, int n, std::uint64_t rng_seed) {
            const VariantSet set = generate_variants(
                plane_from_array(seed), n, GeneratorConfig{GeneratorKind::Augmentation, nullptr},
                rng_seed);
            py::list out;
            for (const ImagePlane& v : set.variants) out.append(array_from_plane(v));
            return out;
        },
        py::arg("seed"), py::arg("n") = 8, py::arg("rng_seed") = 1,
        "Deterministic augmentation variants of one seed image.");

    m.def(
        "optimize_cloak",
        [](const py::array_t<double>& seed, const std::vector<py::array_t<double>>& variants,
           const ToyBackend& backend,
           const std::vector<std::pair<std::string, py::array_t<double>>>& anchor_pool,
           double eps, double eps_boosted, double step, int iterations, bool use_sticker,
           bool use_highpass, bool use_attention, std::uint64_t rng_seed) {
            VariantSet set{plane_from_array(seed), {}, "python", rng_seed};
            for (const auto& v : variants) set.variants.push_back(plane_from_array(v));

            AnchorPool pool;
            pool.source = "python";
            for (const auto& [label, values] : anchor_pool) {
                std::vector<double> v(values.data(), values.data() + values.size());
                pool.entries.emplace_back(make_identity(label), Embedding(std::move(v)));
            }
            const AnchorPair anchors = select_anchors(backend.embed(set.seed), pool);

            OptimizerConfig cfg;
            cfg.eps = eps;
            cfg.eps_boosted = eps_boosted;
            cfg.step = step;
            cfg.iterations = iterations;
            cfg.n_variants = static_cast<int>(set.variants.size());
            cfg.use_sticker = use_sticker;
            cfg.use_highpass = use_highpass;
            cfg.use_attention = use_attention;
            cfg.rng_seed = rng_seed;
            return optimize_cloak(set, anchors, backend, cfg);
        },
        py::arg("seed"), py::arg("variants"), py::arg("backend"), py::arg("anchor_pool"),
        py::arg("eps") = 8.0 / 255.0, py::arg("eps_boosted") = 32.0 / 255.0,
        py::arg("step") = 2.0 / 255.0, py::arg("iterations") = 10, py::arg("use_sticker") = true,
        py::arg("use_highpass") = true, py::arg("use_attention") = true, py::arg("rng_seed") = 1,
        "Run the attention-weighted projected sign-gradient loop for one identity.");

    m.def("apply_cloak", [](const py::array_t<double>& image, const CloakMask& cloak) {
        return array_from_plane(apply_cloak(plane_from_array(image), cloak));
    });

    m.def("ssim", [](const py::array_t<double>& a, const py::array_t<double>& b) {
        return ssim(plane_from_array(a), plane_from_array(b));
    });
    m.def("psnr", [](const py::array_t<double>& a, const py::array_t<double>& b) {
        return psnr(plane_from_array(a), plane_from_array(b));
    });

    m.def(
        "high_pass",
        [](const py::array_t<double>& image, double sigma, double mu, int radius) {
            HighPassConfig cfg{sigma, mu, radius};
            const ImagePlane plane = plane_from_array(image);
            return array_from_vector(high_pass(plane, cfg), plane.height(), plane.width());
        },
        py::arg("image"), py::arg("sigma") = 2.0, py::arg("mu") = 1.0, py::arg("radius") = 6);

    m.def("load_image", [](const std::filesystem::path& path) {
        return array_from_plane(load_image(path));
    });
    m.def("save_png", [](const py::array_t<double>& image, const std::filesystem::path& path) {
        save_png(plane_from_array(image), path);
    });
}
