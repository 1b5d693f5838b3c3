#include "facetell/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "facetell/error.hpp"
#include "facetell/rng.hpp"

namespace facetell::classifier {

using json = nlohmann::json;

LabelLayout::LabelLayout(std::vector<int> app_counts, std::vector<std::string> category_names,
                         std::vector<std::vector<std::string>> app_names)
    : counts_(std::move(app_counts)), category_names_(std::move(category_names)), app_names_(std::move(app_names)) {
    if (counts_.empty()) throw DomainError("label layout needs at least one category");
    for (int k : counts_) {
        if (k < 1) throw DomainError("every category needs at least one application");
        offsets_.push_back(total_);
        total_ += k;
    }
    const auto j = counts_.size();
    if (category_names_.empty()) {
        for (std::size_t i = 0; i < j; ++i) category_names_.push_back("category" + std::to_string(i));
    }
    if (app_names_.empty()) {
        for (std::size_t i = 0; i < j; ++i) {
            std::vector<std::string> names;
            for (int k = 0; k < counts_[i]; ++k) names.push_back(category_names_[i] + "/app" + std::to_string(k));
            app_names_.push_back(std::move(names));
        }
    }
    if (category_names_.size() != j || app_names_.size() != j) throw DomainError("label names do not match layout");
    for (std::size_t i = 0; i < j; ++i) {
        if (app_names_[i].size() != static_cast<std::size_t>(counts_[i])) {
            throw DomainError("application names of category '" + category_names_[i] + "' do not match its count");
        }
    }
}

const std::string& LabelLayout::app_name(int j, int k) const {
    return app_names_.at(static_cast<std::size_t>(j)).at(static_cast<std::size_t>(k));
}

UnifiedLabel unify_label(int category, int app, const LabelLayout& layout) {
    if (category < 0 || category >= layout.categories()) throw DomainError("category index out of range");
    if (app < 0 || app >= layout.apps_in(category)) throw DomainError("application index out of range");
    return {layout.offset(category) + app};
}

CategoryApp split_label(UnifiedLabel label, const LabelLayout& layout) {
    if (!label.known() || label.index >= layout.total()) throw DomainError("label is not a known application");
    int j = layout.categories() - 1;
    while (layout.offset(j) > label.index) --j;
    return {j, label.index - layout.offset(j)};
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw DomainError("softmax of an empty vector");
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - top);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

double cross_entropy(std::span<const double> probs, std::size_t target_index) {
    if (target_index >= probs.size()) throw DomainError("target index out of range");
    return -std::log(std::max(probs[target_index], kProbabilityFloor));
}

double cross_entropy(std::span<const double> probs, std::span<const double> target) {
    if (probs.size() != target.size()) throw DomainError("probability and target sizes differ");
    std::size_t hot = target.size();
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] == 1.0 && hot == target.size()) {
            hot = i;
        } else if (target[i] != 0.0) {
            throw DomainError("target is not one-hot");
        }
    }
    if (hot == target.size()) throw DomainError("target is not one-hot");
    return cross_entropy(probs, hot);
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw DomainError("argmax of an empty vector");
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw DomainError("Adam parameter, gradient and state sizes differ");
    }
    ++state.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

// ---------------------------------------------------------------------------

MlpHead::MlpHead(int inputs, int outputs) : dims_{inputs, kHidden1, kHidden2, outputs} {
    if (inputs < 1 || outputs < 1) throw DomainError("head needs at least one input and one output");
    params_.assign(bias_offset(2) + static_cast<std::size_t>(outputs), 0.0);
}

MlpHead MlpHead::initialized(int inputs, int outputs, std::uint64_t seed) {
    MlpHead head(inputs, outputs);
    Rng rng(seed);
    for (int layer = 0; layer < 3; ++layer) {
        const double sd = std::sqrt(2.0 / head.layer_inputs(layer));
        for (double& w : head.weights(layer)) w = rng.normal(0.0, sd);
    }
    return head;
}

std::size_t MlpHead::weight_offset(int layer) const {
    std::size_t off = 0;
    for (int l = 0; l < layer; ++l) off += static_cast<std::size_t>(dims_[l] + 1) * dims_[l + 1];
    return off;
}

std::span<double> MlpHead::weights(int layer) {
    return std::span<double>(params_).subspan(weight_offset(layer), static_cast<std::size_t>(dims_[layer]) * dims_[layer + 1]);
}
std::span<double> MlpHead::bias(int layer) {
    return std::span<double>(params_).subspan(bias_offset(layer), static_cast<std::size_t>(dims_[layer + 1]));
}
std::span<const double> MlpHead::weights(int layer) const {
    return std::span<const double>(params_).subspan(weight_offset(layer), static_cast<std::size_t>(dims_[layer]) * dims_[layer + 1]);
}
std::span<const double> MlpHead::bias(int layer) const {
    return std::span<const double>(params_).subspan(bias_offset(layer), static_cast<std::size_t>(dims_[layer + 1]));
}

namespace {

// y = W x + b for one layer.
void dense(std::span<const double> w, std::span<const double> b, std::span<const double> x, std::span<double> y) {
    const std::size_t n = x.size();
    for (std::size_t o = 0; o < y.size(); ++o) {
        const double* row = w.data() + o * n;
        double acc = b[o];
        for (std::size_t i = 0; i < n; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

void relu_inplace(std::vector<double>& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

}  // namespace

std::vector<double> MlpHead::logits(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != inputs()) throw DomainError("head input size mismatch");
    std::vector<double> h1(kHidden1), h2(kHidden2), out(static_cast<std::size_t>(outputs()));
    dense(weights(0), bias(0), input, h1);
    relu_inplace(h1);
    dense(weights(1), bias(1), h1, h2);
    relu_inplace(h2);
    dense(weights(2), bias(2), h2, out);
    return out;
}

double MlpHead::accumulate_gradient(std::span<const double> input, std::size_t target, std::span<double> grads) const {
    if (static_cast<int>(input.size()) != inputs()) throw DomainError("head input size mismatch");
    if (grads.size() != params_.size()) throw DomainError("gradient buffer size mismatch");
    if (target >= static_cast<std::size_t>(outputs())) throw DomainError("target index out of range");

    std::vector<double> z1(kHidden1), z2(kHidden2), z3(static_cast<std::size_t>(outputs()));
    dense(weights(0), bias(0), input, z1);
    std::vector<double> a1 = z1;
    relu_inplace(a1);
    dense(weights(1), bias(1), a1, z2);
    std::vector<double> a2 = z2;
    relu_inplace(a2);
    dense(weights(2), bias(2), a2, z3);
    const auto p = softmax(z3);
    const double loss = cross_entropy(p, target);

    // Output layer: d loss / d z3 = p - onehot.
    std::vector<double> d3 = p;
    d3[target] -= 1.0;
    auto backward = [&](int layer, std::span<const double> delta, std::span<const double> x,
                        std::vector<double>* dx, const std::vector<double>* z_prev) {
        const std::size_t n = x.size();
        double* gw = grads.data() + weight_offset(layer);
        double* gb = grads.data() + bias_offset(layer);
        const auto w = weights(layer);
        if (dx) dx->assign(n, 0.0);
        for (std::size_t o = 0; o < delta.size(); ++o) {
            const double d = delta[o];
            gb[o] += d;
            if (d == 0.0) continue;
            double* grow = gw + o * n;
            for (std::size_t i = 0; i < n; ++i) grow[i] += d * x[i];
            if (dx) {
                const double* wrow = w.data() + o * n;
                for (std::size_t i = 0; i < n; ++i) (*dx)[i] += d * wrow[i];
            }
        }
        if (dx) {
            // ReLU subgradient is 0 at 0.
            for (std::size_t i = 0; i < n; ++i) {
                if (!((*z_prev)[i] > 0.0)) (*dx)[i] = 0.0;
            }
        }
    };
    std::vector<double> d2, d1;
    backward(2, d3, a2, &d2, &z2);
    backward(1, d2, a1, &d1, &z1);
    backward(0, d1, input, nullptr, nullptr);
    return loss;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kInitStream = 1000;

void fit_standardization(std::span<const LabeledFeatures> data, std::size_t n, std::vector<double>& mean,
                         std::vector<double>& scale) {
    mean.assign(n, 0.0);
    scale.assign(n, 1.0);
    if (data.empty()) return;
    std::vector<double> var(n, 0.0);
    for (const auto& s : data) {
        for (std::size_t i = 0; i < n; ++i) mean[i] += s.features[i];
    }
    for (double& m : mean) m /= static_cast<double>(data.size());
    for (const auto& s : data) {
        for (std::size_t i = 0; i < n; ++i) var[i] += (s.features[i] - mean[i]) * (s.features[i] - mean[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double sd = std::sqrt(var[i] / static_cast<double>(data.size()));
        scale[i] = sd > 0.0 ? 1.0 / sd : 1.0;
    }
}

std::vector<double> standardize(const TwoTierModel& model, std::span<const double> features) {
    if (features.size() != model.feature_mean.size()) throw DomainError("feature vector length does not match model");
    std::vector<double> out(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) out[i] = (features[i] - model.feature_mean[i]) * model.feature_scale[i];
    return out;
}

struct Example {
    const std::vector<double>* input;
    std::size_t target;
};

void train_head(MlpHead& head, std::vector<Example> examples, const TrainConfig& config, int head_id,
                std::vector<LossRecord>& log) {
    Rng rng(Rng::derive(config.seed, static_cast<std::uint64_t>(head_id)));
    AdamState state(head.params().size());
    const AdamConfig adam{config.lr};
    std::vector<double> grads(head.params().size());
    const std::size_t batch = static_cast<std::size_t>(config.batch);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<Example>(examples));
        int batch_index = 0;
        for (std::size_t start = 0; start < examples.size(); start += batch, ++batch_index) {
            const std::size_t stop = std::min(examples.size(), start + batch);
            std::fill(grads.begin(), grads.end(), 0.0);
            double loss = 0.0;
            for (std::size_t i = start; i < stop; ++i) {
                loss += head.accumulate_gradient(*examples[i].input, examples[i].target, grads);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& g : grads) g *= inv;
            adam_step(head.params(), grads, state, adam);
            log.push_back({head_id, epoch, batch_index, loss * inv});
        }
    }
}

}  // namespace

TwoTierModel initial_model(const LabelLayout& layout, const features::FeatureParams& feature_params,
                           const features::PreprocessConfig& preprocess, std::size_t feature_count,
                           std::uint64_t seed) {
    TwoTierModel model;
    model.layout = layout;
    model.feature_params = feature_params;
    model.preprocess = preprocess;
    model.seed = seed;
    model.feature_mean.assign(feature_count, 0.0);
    model.feature_scale.assign(feature_count, 1.0);
    const int n = static_cast<int>(feature_count);
    model.discriminator = MlpHead::initialized(n, layout.categories(), Rng::derive(seed, kInitStream));
    for (int j = 0; j < layout.categories(); ++j) {
        model.predictors.push_back(
            MlpHead::initialized(n, layout.apps_in(j), Rng::derive(seed, kInitStream + 1 + static_cast<std::uint64_t>(j))));
    }
    return model;
}

TrainResult train_two_tier(std::span<const LabeledFeatures> dataset, const LabelLayout& layout,
                           const features::FeatureParams& feature_params,
                           const features::PreprocessConfig& preprocess, const TrainConfig& config) {
    if (dataset.empty()) throw DomainError("training set is empty");
    if (config.epochs < 0 || config.batch < 1 || !(config.lr > 0.0)) {
        throw DomainError("epochs must be >= 0, batch >= 1 and lr > 0");
    }
    const std::size_t n = dataset.front().features.size();
    for (const auto& s : dataset) {
        if (s.features.size() != n) throw DomainError("training features differ in length");
        if (!s.label.known() || s.label.index >= layout.total()) {
            throw DomainError("training label " + std::to_string(s.label.index) + " is invalid for the layout");
        }
    }

    TrainResult result;
    result.model = initial_model(layout, feature_params, preprocess, n, config.seed);
    auto& model = result.model;
    fit_standardization(dataset, n, model.feature_mean, model.feature_scale);

    std::vector<std::vector<double>> inputs;
    inputs.reserve(dataset.size());
    for (const auto& s : dataset) inputs.push_back(standardize(model, s.features));

    std::vector<Example> category_examples;
    std::vector<std::vector<Example>> app_examples(static_cast<std::size_t>(layout.categories()));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto ca = split_label(dataset[i].label, layout);
        category_examples.push_back({&inputs[i], static_cast<std::size_t>(ca.category)});
        app_examples[static_cast<std::size_t>(ca.category)].push_back({&inputs[i], static_cast<std::size_t>(ca.app)});
    }
    for (int j = 0; j < layout.categories(); ++j) {
        if (app_examples[static_cast<std::size_t>(j)].empty()) {
            throw DomainError("category '" + layout.category_name(j) + "' has no training samples");
        }
    }

    train_head(model.discriminator, std::move(category_examples), config, 0, result.losses);
    for (int j = 0; j < layout.categories(); ++j) {
        train_head(model.predictors[static_cast<std::size_t>(j)], std::move(app_examples[static_cast<std::size_t>(j)]),
                   config, j + 1, result.losses);
    }
    return result;
}

Prediction predict_features(const TwoTierModel& model, std::span<const double> features) {
    const auto x = standardize(model, features);
    Prediction p;
    p.category_probs = model.discriminator.probabilities(x);
    const int j = static_cast<int>(argmax(p.category_probs));
    p.app_probs = model.predictors.at(static_cast<std::size_t>(j)).probabilities(x);
    const int k = static_cast<int>(argmax(p.app_probs));
    p.label = unify_label(j, k, model.layout);
    return p;
}

Prediction predict(const TwoTierModel& model, const FaceImage& image) {
    return predict_features(model, features::extract_features(image, model.feature_params, model.preprocess));
}

double accuracy(std::span<const UnifiedLabel> predicted, std::span<const UnifiedLabel> truth) {
    if (predicted.size() != truth.size()) throw DomainError("label sequences differ in length");
    if (predicted.empty()) throw DomainError("label sequences are empty");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kFormat = "facetell-two-tier-model/1";

json head_to_json(const MlpHead& head) {
    return json{{"inputs", head.inputs()},
                {"outputs", head.outputs()},
                {"params", std::vector<double>(head.params().begin(), head.params().end())}};
}

MlpHead head_from_json(const json& j) {
    MlpHead head(j.at("inputs").get<int>(), j.at("outputs").get<int>());
    const auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != head.params().size()) throw IoError("head parameter count mismatch");
    std::copy(params.begin(), params.end(), head.params().begin());
    return head;
}

template <typename Array>
json array_to_json(const Array& a) {
    return json(std::vector<double>(a.begin(), a.end()));
}

template <typename Array>
void array_from_json(const json& j, Array& a) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != a.size()) throw IoError("feature parameter array has the wrong length");
    std::copy(v.begin(), v.end(), a.begin());
}

json feature_params_to_json(const features::FeatureParams& p) {
    json res_kernels = json::array(), res_scale = json::array(), res_shift = json::array();
    for (int s = 0; s < features::kResStages; ++s) {
        res_kernels.push_back(array_to_json(p.res_kernels[s]));
        res_scale.push_back(array_to_json(p.res_scale[s]));
        res_shift.push_back(array_to_json(p.res_shift[s]));
    }
    return json{{"seed", p.seed},
                {"res_kernels", res_kernels},
                {"res_scale", res_scale},
                {"res_shift", res_shift},
                {"mlp_w1", array_to_json(p.mlp_w1)},
                {"mlp_b1", array_to_json(p.mlp_b1)},
                {"mlp_w2", array_to_json(p.mlp_w2)},
                {"mlp_b2", array_to_json(p.mlp_b2)},
                {"spatial_kernel", array_to_json(p.spatial_kernel)},
                {"spatial_bias", p.spatial_bias}};
}

features::FeatureParams feature_params_from_json(const json& j) {
    features::FeatureParams p;
    p.seed = j.at("seed").get<std::uint64_t>();
    for (int s = 0; s < features::kResStages; ++s) {
        array_from_json(j.at("res_kernels").at(s), p.res_kernels[s]);
        array_from_json(j.at("res_scale").at(s), p.res_scale[s]);
        array_from_json(j.at("res_shift").at(s), p.res_shift[s]);
    }
    array_from_json(j.at("mlp_w1"), p.mlp_w1);
    array_from_json(j.at("mlp_b1"), p.mlp_b1);
    array_from_json(j.at("mlp_w2"), p.mlp_w2);
    array_from_json(j.at("mlp_b2"), p.mlp_b2);
    array_from_json(j.at("spatial_kernel"), p.spatial_kernel);
    p.spatial_bias = j.at("spatial_bias").get<double>();
    return p;
}

}  // namespace

std::string model_to_text(const TwoTierModel& model) {
    json predictors = json::array();
    for (const auto& h : model.predictors) predictors.push_back(head_to_json(h));
    const json doc{{"format", kFormat},
                   {"seed", model.seed},
                   {"layout",
                    {{"app_counts", model.layout.app_counts()},
                     {"categories", model.layout.category_names()},
                     {"apps", model.layout.app_names()}}},
                   {"preprocess", {{"size", model.preprocess.size}, {"grid", model.preprocess.grid}}},
                   {"feature_params", feature_params_to_json(model.feature_params)},
                   {"feature_mean", model.feature_mean},
                   {"feature_scale", model.feature_scale},
                   {"discriminator", head_to_json(model.discriminator)},
                   {"predictors", predictors}};
    return doc.dump() + "\n";
}

TwoTierModel model_from_text(const std::string& text) {
    try {
        const json doc = json::parse(text);
        if (doc.at("format").get<std::string>() != kFormat) throw IoError("unsupported model format");
        TwoTierModel model;
        model.seed = doc.at("seed").get<std::uint64_t>();
        const auto& layout = doc.at("layout");
        model.layout = LabelLayout(layout.at("app_counts").get<std::vector<int>>(),
                                   layout.at("categories").get<std::vector<std::string>>(),
                                   layout.at("apps").get<std::vector<std::vector<std::string>>>());
        model.preprocess.size = doc.at("preprocess").at("size").get<int>();
        model.preprocess.grid = doc.at("preprocess").at("grid").get<int>();
        model.feature_params = feature_params_from_json(doc.at("feature_params"));
        model.feature_mean = doc.at("feature_mean").get<std::vector<double>>();
        model.feature_scale = doc.at("feature_scale").get<std::vector<double>>();
        model.discriminator = head_from_json(doc.at("discriminator"));
        for (const auto& h : doc.at("predictors")) model.predictors.push_back(head_from_json(h));
        if (static_cast<int>(model.predictors.size()) != model.layout.categories() ||
            model.discriminator.outputs() != model.layout.categories()) {
            throw IoError("model heads do not match the label layout");
        }
        for (int j = 0; j < model.layout.categories(); ++j) {
            if (model.predictors[static_cast<std::size_t>(j)].outputs() != model.layout.apps_in(j)) {
                throw IoError("predictor size does not match the label layout");
            }
        }
        if (model.feature_mean.size() != model.feature_scale.size() ||
            static_cast<int>(model.feature_mean.size()) != model.discriminator.inputs()) {
            throw IoError("feature standardization does not match the heads");
        }
        return model;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const TwoTierModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << model_to_text(model);
    if (!out) throw IoError("failed writing " + path.string());
}

TwoTierModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_text(ss.str());
}

}  // namespace facetell::classifier
