#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>

#include "facetell/analysis.hpp"
#include "facetell/classifier.hpp"
#include "facetell/error.hpp"
#include "facetell/experiment.hpp"
#include "facetell/features.hpp"
#include "facetell/hlc.hpp"
#include "facetell/optics.hpp"
#include "facetell/scene.hpp"

namespace py = pybind11;
using namespace facetell;

namespace {

using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

FaceImage to_image(const ImageArray& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw DomainError("image must have shape (height, width, 3)");
    FaceImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::memcpy(img.pixels.data(), a.data(), img.pixels.size());
    return img;
}

ImageArray to_array(const FaceImage& img) {
    ImageArray a({img.height, img.width, 3});
    std::memcpy(a.mutable_data(), img.pixels.data(), img.pixels.size());
    return a;
}

experiment::ExperimentConfig config_or_default(const std::optional<std::string>& json) {
    return json ? experiment::config_from_json(*json) : experiment::default_config();
}

Vec3 vec(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

std::vector<classifier::UnifiedLabel> labels(const std::vector<int>& v) {
    std::vector<classifier::UnifiedLabel> out;
    for (int i : v) out.push_back(classifier::UnifiedLabel{i < 0 ? classifier::UnifiedLabel::kUnknown : i});
    return out;
}

std::vector<int> indices(const std::vector<classifier::UnifiedLabel>& v) {
    std::vector<int> out;
    for (auto l : v) out.push_back(l.index);
    return out;
}

hlc::HlcParams hlc_params(double sigma_s, int t_s, double sigma_e, int t_e) { return {sigma_s, t_s, sigma_e, t_e}; }

// Frames handed back to Python as dicts.
py::list frames_to_list(const std::vector<experiment::Frame>& frames) {
    py::list out;
    for (const auto& f : frames) {
        py::dict d;
        d["image"] = to_array(f.image);
        d["label"] = f.label.index;
        d["sequence"] = f.sequence;
        d["t"] = f.t;
        d["split"] = f.split == experiment::Split::Train ? "train" : "test";
        out.append(d);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_facetell, m) {
    m.doc() = "Facial-reflection side-channel simulator";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.attr("UNKNOWN") = classifier::UnifiedLabel::kUnknown;

    // --- optics ---
    m.def(
        "reflected_intensity",
        [](std::array<double, 3> position, std::array<double, 3> normal,
           const std::vector<std::pair<std::array<double, 3>, std::array<double, 3>>>& emitters,
           std::array<double, 3> screen_normal, std::array<double, 3> camera, double g, std::array<double, 3> ambient,
           double k_d, double k_s, double k_a, double n_s, bool planar) {
            optics::FacePoint p{vec(position), normalized(vec(normal)), k_d, k_s, k_a, n_s};
            std::vector<optics::EmitterUnit> units;
            for (const auto& [pos, rad] : emitters) units.push_back({vec(pos), rad});
            const optics::OpticsConfig cfg{g, ambient};
            const Vec3 sn = normalized(vec(screen_normal));
            return planar ? optics::reflected_intensity_planar(p, units, sn, vec(camera), cfg)
                          : optics::reflected_intensity(p, units, sn, vec(camera), cfg);
        },
        py::arg("position"), py::arg("normal"), py::arg("emitters"), py::arg("screen_normal"), py::arg("camera"),
        py::arg("g") = optics::kDefaultAngularExponent, py::arg("ambient") = std::array<double, 3>{0, 0, 0},
        py::arg("k_d") = 0.6, py::arg("k_s") = 0.3, py::arg("k_a") = 0.5, py::arg("n_s") = optics::kDefaultShininess,
        py::arg("planar") = false,
        "Phong radiance toward the camera from a list of (position, rgb) emitters.");

    // --- analysis ---
    m.def(
        "ks_test",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            const auto r = analysis::ks_test(x, y);
            return py::make_tuple(r.d, r.p);
        },
        py::arg("x"), py::arg("y"), "Two-sample KS test; returns (D, p).");
    m.def("ks_pvalue", &analysis::ks_pvalue, py::arg("d"), py::arg("n"), py::arg("m"));

    // --- configuration ---
    m.def("default_config", [] { return experiment::config_to_json(experiment::default_config()); });
    m.def(
        "validate_config", [](const std::string& json) { return experiment::config_to_json(experiment::config_from_json(json)); },
        py::arg("config"), "Parses and validates a config, returning it with defaults filled in.");

    // --- scene ---
    m.def(
        "render_face",
        [](const ImageArray& content, std::optional<std::string> config) {
            const auto c = config_or_default(config);
            return to_array(scene::render_face(scene::build_scene(c.scene, to_image(content))));
        },
        py::arg("content"), py::arg("config") = py::none(), "Face image lit by the given screen content.");
    m.def(
        "simulate_weight_curves",
        [](std::optional<std::string> config) {
            py::list out;
            for (const auto& c : scene::simulate_weight_curves(config_or_default(config).weights)) {
                py::dict d;
                d["x"] = c.unit_x;
                d["diffuse"] = c.diffuse;
                d["specular"] = c.specular;
                out.append(d);
            }
            return out;
        },
        py::arg("config") = py::none());
    m.def(
        "mdc_search",
        [](std::optional<std::string> config) {
            const auto c = config_or_default(config);
            const auto r = analysis::mdc_search(c.scene, experiment::mdc_options(c));
            py::list rows;
            for (const auto& row : r.rows) {
                py::dict d;
                d["fraction"] = row.fraction;
                d["min_p"] = row.min_p;
                d["best_threshold"] = row.best_threshold;
                rows.append(d);
            }
            py::dict out;
            out["rows"] = rows;
            out["boundary"] = r.boundary;
            out["smallest_distinguishable"] = r.smallest_distinguishable;
            return out;
        },
        py::arg("config") = py::none());

    // --- dataset ---
    m.def(
        "app_palette",
        [](int label, std::uint64_t seed, int width, int height) {
            return to_array(experiment::app_palette(label, seed, width, height));
        },
        py::arg("label"), py::arg("seed") = 1, py::arg("width") = 256, py::arg("height") = 144);
    m.def(
        "generate_dataset",
        [](std::optional<std::string> config) { return frames_to_list(experiment::generate_dataset(config_or_default(config))); },
        py::arg("config") = py::none(), "Synthetic frames as dicts with image, label, sequence, t and split.");

    // --- features and classifier ---
    m.def(
        "extract_features",
        [](const ImageArray& image, std::optional<std::string> config) {
            const auto c = config_or_default(config);
            return features::extract_features(to_image(image), experiment::feature_params_for(c), c.training.preprocess);
        },
        py::arg("image"), py::arg("config") = py::none());
    m.def(
        "train_model",
        [](std::optional<std::string> config) {
            const auto c = config_or_default(config);
            const auto frames = experiment::generate_dataset(c);
            const auto train = experiment::compute_features(frames, experiment::Split::Train,
                                                            experiment::feature_params_for(c), c.training.preprocess);
            const auto result = experiment::train_model(c, train);
            py::list losses;
            for (const auto& r : result.losses) losses.append(py::make_tuple(r.head, r.epoch, r.batch, r.loss));
            return py::make_tuple(classifier::model_to_text(result.model), losses);
        },
        py::arg("config") = py::none(),
        "Generates the configured dataset and trains on its training split; returns (model_json, losses).");
    m.def(
        "predict",
        [](const std::string& model_json, const ImageArray& image) {
            const auto model = classifier::model_from_text(model_json);
            const auto p = classifier::predict(model, to_image(image));
            py::dict d;
            d["label"] = p.label.index;
            d["category_probs"] = p.category_probs;
            d["app_probs"] = p.app_probs;
            return d;
        },
        py::arg("model"), py::arg("image"));
    m.def(
        "attack",
        [](const std::string& model_json, const std::vector<ImageArray>& frames, const std::vector<int>& truth,
           double sigma_s, int t_s, double sigma_e, int t_e) {
            const auto model = classifier::model_from_text(model_json);
            std::vector<FaceImage> images;
            for (const auto& f : frames) images.push_back(to_image(f));
            std::vector<const FaceImage*> ptrs;
            for (const auto& i : images) ptrs.push_back(&i);
            const auto r = experiment::attack(model, ptrs, labels(truth), hlc_params(sigma_s, t_s, sigma_e, t_e));
            py::dict d;
            d["predicted"] = indices(r.predicted);
            d["corrected"] = indices(r.corrected);
            if (!truth.empty()) {
                d["accuracy_raw"] = r.accuracy_raw;
                d["accuracy_corrected"] = r.accuracy_corrected;
            }
            return d;
        },
        py::arg("model"), py::arg("frames"), py::arg("truth") = std::vector<int>{}, py::arg("sigma_s") = 0.90,
        py::arg("t_s") = 10, py::arg("sigma_e") = 0.10, py::arg("t_e") = 10);

    // --- label correction ---
    m.def(
        "hlc_correct",
        [](const std::vector<int>& y, double sigma_s, int t_s, double sigma_e, int t_e) {
            return indices(hlc::correct_labels(labels(y), hlc_params(sigma_s, t_s, sigma_e, t_e)));
        },
        py::arg("labels"), py::arg("sigma_s") = 0.90, py::arg("t_s") = 10, py::arg("sigma_e") = 0.10,
        py::arg("t_e") = 10, "Heuristic label correction; -1 marks UNKNOWN.");
    m.def(
        "hlc_sweep",
        [](const std::vector<int>& predicted, const std::vector<int>& truth) {
            const auto rows = hlc::sweep_params(labels(predicted), labels(truth), hlc::default_sweep_grid());
            py::list out;
            for (const auto& r : rows)
                out.append(py::make_tuple(r.params.sigma_s, r.params.t_s, r.params.sigma_e, r.params.t_e, r.accuracy));
            return out;
        },
        py::arg("predicted"), py::arg("truth"), "Accuracy over the default parameter grid as (sigma_s, T_s, sigma_e, T_e, accuracy).");
}
