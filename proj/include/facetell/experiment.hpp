#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "facetell/analysis.hpp"
#include "facetell/classifier.hpp"
#include "facetell/hlc.hpp"
#include "facetell/scene.hpp"

/// Experiment orchestration shared by the command-line tool, the tests and
/// the Python module: configuration, synthetic application palettes,
/// dataset generation and attack runs.
namespace facetell::experiment {

struct NoiseModel {
    double pixel_sigma = 12.75;       // per-pixel Gaussian, intensity levels (5% of 255)
    double ambient_jitter = 0.05;     // per-frame relative ambient variation
    double brightness_jitter = 0.05;  // per-frame relative screen brightness variation
    double face_offset = 0.005;       // per-session face position jitter, m
    double face_scale = 0.03;         // per-session relative semi-axis jitter
};

struct DatasetSpec {
    int frames_per_app = 120;
    int train_sessions = 2;
    int test_sessions = 1;
    double timestep = 0.5;
    int content_width = 256;
    int content_height = 144;
};

struct TrainingSpec {
    int epochs = 5;
    int batch = 16;
    double lr = 1e-4;
    features::PreprocessConfig preprocess;
};

struct MdcSpec {
    std::vector<double> fractions{1.0 / 64, 1.0 / 25, 1.0 / 16, 1.0 / 4, 1.0};
    double noise_sigma = 2.0;
    int content_width = 512;
    int content_height = 288;
};

struct ExperimentConfig {
    scene::SceneSpec scene;
    classifier::LabelLayout layout;
    NoiseModel noise;
    DatasetSpec dataset;
    hlc::HlcParams hlc;
    TrainingSpec training;
    scene::CrossSectionLayout weights;
    MdcSpec mdc;
    std::uint64_t seed = 1;
};

/// Six categories with 6, 6, 6, 8, 2 and 1 labels: web, office, programming,
/// multimedia, OS applications and a conferencing-only label.
classifier::LabelLayout default_layout();

/// Three face points over a 101-unit screen segment.
scene::CrossSectionLayout default_cross_section();

ExperimentConfig default_config();

/// JSON document; keys that are absent keep their defaults, unknown keys are
/// rejected.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

void validate(const ExperimentConfig& config);

/// Deterministic screen content for one application: a split, banded,
/// quadrant, boxed or bar layout in colours picked from the label index and
/// seed. Distinct labels always get distinct layouts.
FaceImage app_palette(int label_index, std::uint64_t seed, int width, int height);

enum class Split { Train, Test };

struct Frame {
    FaceImage image;
    classifier::UnifiedLabel label;
    int sequence = 0;
    int t = 0;
    Split split = Split::Train;
};

/// Sessions visit every application once, in a seeded order, for
/// frames_per_app frames each. Train sessions come first, then test sessions;
/// sequence ids are session indices.
std::vector<Frame> generate_dataset(const ExperimentConfig& config);

/// Writes frames/<file>.ppm plus manifest.csv with header
/// `file,label_index,category,app,sequence_id,t,split`.
void write_dataset(const std::filesystem::path& dir, const std::vector<Frame>& frames,
                   const classifier::LabelLayout& layout);

struct ManifestRow {
    std::filesystem::path file;
    classifier::UnifiedLabel label;
    int sequence = 0;
    int t = 0;
    Split split = Split::Train;
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& dir);

std::vector<classifier::LabeledFeatures> compute_features(const std::vector<Frame>& frames, Split split,
                                                          const features::FeatureParams& params,
                                                          const features::PreprocessConfig& preprocess);

features::FeatureParams feature_params_for(const ExperimentConfig& config);

classifier::TrainResult train_model(const ExperimentConfig& config,
                                    std::span<const classifier::LabeledFeatures> samples);

/// Frames of one sequence ordered by time.
std::vector<const Frame*> sequence_frames(const std::vector<Frame>& frames, int sequence);

struct AttackResult {
    std::vector<classifier::UnifiedLabel> predicted;
    std::vector<classifier::UnifiedLabel> corrected;
    std::vector<classifier::UnifiedLabel> truth;
    double accuracy_raw = 0.0;
    double accuracy_corrected = 0.0;
};

AttackResult attack(const classifier::TwoTierModel& model, std::span<const FaceImage* const> frames,
                    std::span<const classifier::UnifiedLabel> truth, const hlc::HlcParams& params);

/// Loss log CSV: header `head,epoch,batch,loss`.
void write_loss_log(std::ostream& out, std::span<const classifier::LossRecord> losses);

analysis::MdcOptions mdc_options(const ExperimentConfig& config);

}  // namespace facetell::experiment
