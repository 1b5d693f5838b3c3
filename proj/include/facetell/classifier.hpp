#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "facetell/features.hpp"
#include "facetell/image.hpp"

namespace facetell::classifier {

/// Unified application label over all categories, or UNKNOWN.
struct UnifiedLabel {
    static constexpr int kUnknown = -1;
    int index = kUnknown;

    static constexpr UnifiedLabel unknown() { return {}; }
    constexpr bool known() const { return index >= 0; }
    friend constexpr bool operator==(UnifiedLabel, UnifiedLabel) = default;
};

/// Category structure: J categories, K_j applications each, K = sum K_j.
class LabelLayout {
public:
    LabelLayout() = default;
    explicit LabelLayout(std::vector<int> app_counts, std::vector<std::string> category_names = {},
                         std::vector<std::vector<std::string>> app_names = {});

    int categories() const { return static_cast<int>(counts_.size()); }
    int apps_in(int category) const { return counts_.at(static_cast<std::size_t>(category)); }
    int total() const { return total_; }
    const std::vector<int>& app_counts() const { return counts_; }
    const std::string& category_name(int j) const { return category_names_.at(static_cast<std::size_t>(j)); }
    const std::string& app_name(int j, int k) const;
    const std::vector<std::string>& category_names() const { return category_names_; }
    const std::vector<std::vector<std::string>>& app_names() const { return app_names_; }

    int offset(int category) const { return offsets_.at(static_cast<std::size_t>(category)); }

    friend bool operator==(const LabelLayout&, const LabelLayout&) = default;

private:
    std::vector<int> counts_;
    std::vector<int> offsets_;
    int total_ = 0;
    std::vector<std::string> category_names_;
    std::vector<std::vector<std::string>> app_names_;
};

struct CategoryApp {
    int category = 0;
    int app = 0;
    friend bool operator==(const CategoryApp&, const CategoryApp&) = default;
};

/// index = sum_{i<j} K_i + k.
UnifiedLabel unify_label(int category, int app, const LabelLayout& layout);
CategoryApp split_label(UnifiedLabel label, const LabelLayout& layout);

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

inline constexpr double kProbabilityFloor = 1e-12;

/// -log p[target] with p clamped below at 1e-12; `target` must be one-hot.
double cross_entropy(std::span<const double> probs, std::span<const double> target);
double cross_entropy(std::span<const double> probs, std::size_t target_index);

/// Index of the largest value; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long long t = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update, in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg);

inline constexpr int kHidden1 = 512;
inline constexpr int kHidden2 = 256;

/// Three dense layers in -> 512 -> 256 -> out, ReLU between, softmax on top.
/// Parameters live in one flat vector: for each layer its row-major
/// [out][in] weights followed by its biases.
class MlpHead {
public:
    MlpHead() = default;
    MlpHead(int inputs, int outputs);

    /// He-normal weights (std sqrt(2 / fan_in)), zero biases.
    static MlpHead initialized(int inputs, int outputs, std::uint64_t seed);

    int inputs() const { return dims_[0]; }
    int outputs() const { return dims_[3]; }
    int layer_inputs(int layer) const { return dims_[layer]; }
    int layer_outputs(int layer) const { return dims_[layer + 1]; }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    std::span<double> weights(int layer);
    std::span<double> bias(int layer);
    std::span<const double> weights(int layer) const;
    std::span<const double> bias(int layer) const;

    std::vector<double> logits(std::span<const double> input) const;
    std::vector<double> probabilities(std::span<const double> input) const { return softmax(logits(input)); }

    /// Cross-entropy loss for one sample; adds d(loss)/d(params) into `grads`.
    double accumulate_gradient(std::span<const double> input, std::size_t target, std::span<double> grads) const;

    friend bool operator==(const MlpHead&, const MlpHead&) = default;

private:
    std::size_t weight_offset(int layer) const;
    std::size_t bias_offset(int layer) const { return weight_offset(layer) + static_cast<std::size_t>(dims_[layer]) * dims_[layer + 1]; }

    std::array<int, 4> dims_{0, 0, 0, 0};
    std::vector<double> params_;
};

struct TwoTierModel {
    LabelLayout layout;
    features::FeatureParams feature_params;
    features::PreprocessConfig preprocess;
    // Per-feature standardization fitted on the training set.
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;
    MlpHead discriminator;
    std::vector<MlpHead> predictors;
    std::uint64_t seed = 0;

    friend bool operator==(const TwoTierModel&, const TwoTierModel&) = default;
};

struct LabeledFeatures {
    std::vector<double> features;
    UnifiedLabel label;
};

struct TrainConfig {
    int epochs = 5;
    int batch = 16;
    double lr = 1e-4;
    std::uint64_t seed = 0;
};

struct LossRecord {
    int head = 0;  // 0 = discriminator, j + 1 = predictor of category j
    int epoch = 0;
    int batch = 0;
    double loss = 0.0;
};

struct TrainResult {
    TwoTierModel model;
    std::vector<LossRecord> losses;
};

/// Seeded heads before any update (what training starts from).
TwoTierModel initial_model(const LabelLayout& layout, const features::FeatureParams& feature_params,
                           const features::PreprocessConfig& preprocess, std::size_t feature_count,
                           std::uint64_t seed);

/// Trains the discriminator on category labels and each predictor on the
/// samples of its own category. Deterministic for a given seed.
TrainResult train_two_tier(std::span<const LabeledFeatures> dataset, const LabelLayout& layout,
                           const features::FeatureParams& feature_params,
                           const features::PreprocessConfig& preprocess, const TrainConfig& config);

struct Prediction {
    UnifiedLabel label;
    std::vector<double> category_probs;
    std::vector<double> app_probs;
};

Prediction predict_features(const TwoTierModel& model, std::span<const double> features);
Prediction predict(const TwoTierModel& model, const FaceImage& image);

/// Fraction of exact label matches; UNKNOWN only matches UNKNOWN.
double accuracy(std::span<const UnifiedLabel> predicted, std::span<const UnifiedLabel> truth);

void save_model(const std::filesystem::path& path, const TwoTierModel& model);
TwoTierModel load_model(const std::filesystem::path& path);
std::string model_to_text(const TwoTierModel& model);
TwoTierModel model_from_text(const std::string& text);

}  // namespace facetell::classifier
