#include "kmkc/error.hpp"
#include "kmkc/experiment.hpp"
#include "kmkc/features.hpp"
#include "kmkc/gemm.hpp"
#include "kmkc/kmeans.hpp"
#include "kmkc/linear_solve.hpp"
#include "kmkc/lssvm.hpp"
#include "kmkc/mnist_io.hpp"
#include "kmkc/model_io.hpp"
#include "kmkc/parallel.hpp"
#include "kmkc/spectrum.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <fstream>

namespace py = pybind11;
using namespace kmkc;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& a) {
    if (a.ndim() != 2) {
        throw DimensionError("expected a 2-d array");
    }
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return Matrix::from_values(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

py::array_t<double> to_array(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::memcpy(out.mutable_data(), m.data(), m.size() * sizeof(double));
    return out;
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
    return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<bool> to_mask(const std::vector<std::uint8_t>& v) {
    py::array_t<bool> out(static_cast<py::ssize_t>(v.size()));
    auto* p = out.mutable_data();
    for (std::size_t i = 0; i < v.size(); ++i) {
        p[i] = v[i] != 0;
    }
    return out;
}

// (N, rows, cols) uint8 array -> ImageSet
ImageSet to_images(const ByteArray& a) {
    if (a.ndim() != 3) {
        throw DimensionError("images must be a 3-d (count, rows, cols) uint8 array");
    }
    ImageSet s;
    s.count = static_cast<std::size_t>(a.shape(0));
    s.rows = static_cast<std::size_t>(a.shape(1));
    s.cols = static_cast<std::size_t>(a.shape(2));
    s.pixels.assign(a.data(), a.data() + s.count * s.rows * s.cols);
    return s;
}

py::array_t<std::uint8_t> from_images(const ImageSet& s) {
    py::array_t<std::uint8_t> out({s.count, s.rows, s.cols});
    std::memcpy(out.mutable_data(), s.pixels.data(), s.pixels.size());
    return out;
}

LabelSet to_labels(const LabelArray& a, std::optional<std::size_t> classes) {
    if (a.ndim() != 1) {
        throw DimensionError("labels must be a 1-d array");
    }
    LabelSet s;
    s.labels.assign(a.data(), a.data() + a.shape(0));
    std::uint32_t top = 0;
    for (auto l : s.labels) {
        top = std::max(top, l);
    }
    s.classes = classes.value_or(s.labels.empty() ? 0 : top + 1);
    for (auto l : s.labels) {
        if (l >= s.classes) {
            throw InvalidArgument("label " + std::to_string(l) + " out of range for " + std::to_string(s.classes) +
                                  " classes");
        }
    }
    return s;
}

FeatureRegime make_regime(const std::string& mode, std::size_t patch_size) {
    const FeatureMode m = parse_feature_mode(mode);
    return {m, m == FeatureMode::patch ? patch_size : 0};
}

py::tuple batch_tuple(const FeatureBatch& b) {
    return py::make_tuple(to_array(b.vectors), to_mask(b.valid));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "K-means prototypes + least-squares kernel classifier";

    auto base = py::register_exception<Error>(m, "KmkcError", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<TruncatedInput>(m, "TruncatedInput", base.ptr());
    py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
    py::register_exception<DegenerateInput>(m, "DegenerateInput", base.ptr());
    py::register_exception<Unclassifiable>(m, "Unclassifiable", base.ptr());
    py::register_exception<SingularMatrix>(m, "SingularMatrix", base.ptr());

    m.def("set_thread_count", &set_thread_count, py::arg("threads"));
    m.def("thread_count", &thread_count);

    // numerics
    m.def(
        "gemm",
        [](const DoubleArray& a, const DoubleArray& b, bool transpose_b) {
            return to_array(gemm(to_matrix(a), to_matrix(b), transpose_b ? Transpose::yes : Transpose::no));
        },
        py::arg("a"), py::arg("b"), py::arg("transpose_b") = false);
    m.def(
        "solve_dense", [](const DoubleArray& a, const DoubleArray& b) { return to_array(solve_dense(to_matrix(a), to_matrix(b))); },
        py::arg("a"), py::arg("b"));
    m.def(
        "dft_halfspectrum_sqrtmag",
        [](const DoubleArray& x) {
            if (x.ndim() != 1) {
                throw DimensionError("expected a 1-d array");
            }
            return to_array(dft_halfspectrum_sqrtmag(std::span<const double>(x.data(), static_cast<std::size_t>(x.shape(0)))));
        },
        py::arg("x"));

    // data
    m.def("load_idx_images", [](const std::filesystem::path& p) { return from_images(load_idx_images(p)); }, py::arg("path"));
    m.def(
        "load_idx_labels",
        [](const std::filesystem::path& p, std::optional<std::size_t> classes) {
            return to_array(load_idx_labels(p, classes).labels);
        },
        py::arg("path"), py::arg("classes") = std::nullopt);
    m.def(
        "save_idx_images",
        [](const std::filesystem::path& p, const ByteArray& images) {
            const auto bytes = encode_idx_images(to_images(images));
            std::ofstream out(p, std::ios::binary);
            out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        },
        py::arg("path"), py::arg("images"));
    m.def(
        "save_idx_labels",
        [](const std::filesystem::path& p, const LabelArray& labels) {
            const auto bytes = encode_idx_labels(to_labels(labels, std::nullopt));
            std::ofstream out(p, std::ios::binary);
            out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        },
        py::arg("path"), py::arg("labels"));

    // features
    m.def("raw_features", [](const ByteArray& images) { return batch_tuple(raw_features(to_images(images))); },
          py::arg("images"), "Centered, unit-norm column-vectorized images -> (vectors, valid).");
    m.def("fft_features", [](const ByteArray& images) { return batch_tuple(fft_features(to_images(images))); },
          py::arg("images"), "Raw features joined with the sqrt half spectrum -> (vectors, valid).");
    m.def(
        "extract_patches",
        [](const ByteArray& image, std::size_t patch_side) {
            if (image.ndim() != 2 || image.shape(0) != image.shape(1)) {
                throw DimensionError("image must be a square 2-d uint8 array");
            }
            const auto side = static_cast<std::size_t>(image.shape(0));
            const PatchSet p = extract_patches(std::span<const std::uint8_t>(image.data(), side * side), side, patch_side);
            return py::make_tuple(to_array(p.patches), to_mask(p.valid));
        },
        py::arg("image"), py::arg("patch_side"));

    // K-means
    m.def(
        "kmeans_assign",
        [](const DoubleArray& x, const DoubleArray& centroids) {
            const Assignment a = assign(to_matrix(x), to_matrix(centroids));
            std::vector<std::int64_t> out(a.cluster.begin(), a.cluster.end());
            return to_array(out);
        },
        py::arg("x"), py::arg("centroids"));
    m.def(
        "kmeans_fit",
        [](const DoubleArray& x, std::size_t q, std::uint64_t seed, double tau, std::size_t max_iter) {
            Rng rng(seed);
            const CentroidSet s = fit(to_matrix(x), {q, tau, max_iter}, rng);
            py::dict d;
            d["centroids"] = to_array(s.centroids);
            d["iterations"] = s.iterations;
            d["final_delta"] = s.final_delta;
            d["delta_trace"] = s.delta_trace;
            d["reseeded"] = s.reseeded;
            return d;
        },
        py::arg("x"), py::arg("q"), py::arg("seed") = 1, py::arg("tau") = 1e-6, py::arg("max_iter") = 300,
        "Spherical K-means on unit-norm rows.");

    // kernel classifier
    py::class_<KernelModel>(m, "KernelModel")
        .def_property_readonly("support", [](const KernelModel& k) { return to_array(k.support); })
        .def_property_readonly("weights", [](const KernelModel& k) { return to_array(k.weights); })
        .def_property_readonly("bias", [](const KernelModel& k) { return to_array(k.bias); })
        .def_property_readonly("kernel", [](const KernelModel& k) { return to_string(k.kernel); })
        .def_readonly("epsilon", &KernelModel::epsilon)
        .def("decision_scores", [](const KernelModel& k, const DoubleArray& x) { return to_array(decision_scores(k, to_matrix(x))); })
        .def("softmax_scores", [](const KernelModel& k, const DoubleArray& x) { return to_array(softmax_scores(k, to_matrix(x))); })
        .def("classify", [](const KernelModel& k, const DoubleArray& x) { return to_array(classify(k, to_matrix(x))); });
    m.def(
        "train_lssvm",
        [](const DoubleArray& prototypes, const LabelArray& labels, std::optional<std::size_t> classes,
           const std::string& kernel, double epsilon) {
            const LabelSet l = to_labels(labels, classes);
            TrainResult r = train(to_matrix(prototypes), one_hot_matrix(l), parse_kernel_spec(kernel), epsilon);
            return py::make_tuple(std::move(r.model), r.residual);
        },
        py::arg("prototypes"), py::arg("labels"), py::arg("classes") = std::nullopt, py::arg("kernel") = "poly:4",
        py::arg("epsilon") = 1e-6, "Solve the bordered kernel system -> (model, relative residual).");

    // end-to-end models
    py::class_<StoredModel>(m, "Model")
        .def_property_readonly("mode", [](const StoredModel& s) { return regime_label(s.regime); })
        .def_readonly("image_side", &StoredModel::image_side)
        .def_readonly("kernel_model", &StoredModel::model)
        .def("predict", [](const StoredModel& s, const ByteArray& images) { return to_array(predict(s, to_images(images))); },
             py::arg("images"), "Class per image, -1 where it cannot be classified.")
        .def("save", [](const StoredModel& s, const std::filesystem::path& p) { save_model(p, s); }, py::arg("path"))
        .def("to_bytes", [](const StoredModel& s) {
            const auto b = serialize_model(s);
            return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
        })
        .def_static("load", &load_model, py::arg("path"))
        .def_static("from_bytes", [](const py::bytes& b) {
            const std::string s = b;
            return deserialize_model(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
        });
    m.def(
        "fit",
        [](const ByteArray& images, const LabelArray& labels, const std::string& mode, std::size_t q, std::uint64_t seed,
           std::size_t patch_size, double epsilon, double tau, std::size_t max_iter, const std::string& kernel,
           std::optional<std::size_t> classes, bool big) {
            ModelSettings s{make_regime(mode, patch_size), q, epsilon, tau, max_iter, parse_kernel_spec(kernel), big};
            FitOutcome f = fit_model(to_images(images), to_labels(labels, classes), s, seed);
            py::dict info;
            info["residual"] = f.residual;
            info["kmeans_iterations"] = f.kmeans_iterations;
            return py::make_tuple(std::move(f.model), info);
        },
        py::arg("images"), py::arg("labels"), py::arg("mode") = "raw", py::arg("q") = 100, py::arg("seed") = 1,
        py::arg("patch_size") = 25, py::arg("epsilon") = 1e-6, py::arg("tau") = 1e-6, py::arg("max_iter") = 300,
        py::arg("kernel") = "poly:4", py::arg("classes") = std::nullopt, py::arg("big") = false,
        "Train a classifier on (count, side, side) uint8 images -> (Model, info).");
    m.def(
        "error_rate",
        [](const py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>& predicted, const LabelArray& truth) {
            return error_rate(std::span(predicted.data(), static_cast<std::size_t>(predicted.size())),
                              std::span(truth.data(), static_cast<std::size_t>(truth.size())));
        },
        py::arg("predicted"), py::arg("truth"));
}
