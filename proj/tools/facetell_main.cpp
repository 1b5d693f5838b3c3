// facetell: command-line front end for the reflection simulator.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "facetell/csv.hpp"
#include "facetell/error.hpp"
#include "facetell/experiment.hpp"

namespace fs = std::filesystem;
using namespace facetell;
using classifier::UnifiedLabel;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

struct HlcFlags {
    std::optional<double> sigma_s;
    std::optional<int> t_s;
    std::optional<double> sigma_e;
    std::optional<int> t_e;
};

struct TrainFlags {
    std::optional<int> epochs;
    std::optional<int> batch;
    std::optional<double> lr;
    std::optional<int> l_size;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
    cmd->add_option("--config", c.config, "Experiment config (JSON); omitted keys keep their defaults")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Override the config seed");
    auto* out = cmd->add_option("--out", c.out, "Output path");
    if (out_required) out->required();
}

void add_hlc(CLI::App* cmd, HlcFlags& h) {
    cmd->add_option("--sigma-s", h.sigma_s, "Start proportion threshold (default 0.9)");
    cmd->add_option("--t-s", h.t_s, "Start window length (default 10)");
    cmd->add_option("--sigma-e", h.sigma_e, "End proportion threshold (default 0.1)");
    cmd->add_option("--t-e", h.t_e, "End window length (default 10)");
}

void add_train(CLI::App* cmd, TrainFlags& t) {
    cmd->add_option("--epochs", t.epochs, "Training epochs (default 5)");
    cmd->add_option("--batch", t.batch, "Minibatch size (default 16)");
    cmd->add_option("--lr", t.lr, "Adam learning rate (default 1e-4)");
    cmd->add_option("--l-size", t.l_size, "Side length L of the normalized face image (default 64)");
}

experiment::ExperimentConfig load(const Common& c, const HlcFlags* h = nullptr, const TrainFlags* t = nullptr) {
    auto config = c.config.empty() ? experiment::default_config() : experiment::load_config(c.config);
    if (c.seed) config.seed = *c.seed;
    if (h) {
        if (h->sigma_s) config.hlc.sigma_s = *h->sigma_s;
        if (h->t_s) config.hlc.t_s = *h->t_s;
        if (h->sigma_e) config.hlc.sigma_e = *h->sigma_e;
        if (h->t_e) config.hlc.t_e = *h->t_e;
    }
    if (t) {
        if (t->epochs) config.training.epochs = *t->epochs;
        if (t->batch) config.training.batch = *t->batch;
        if (t->lr) config.training.lr = *t->lr;
        if (t->l_size) config.training.preprocess.size = *t->l_size;
    }
    experiment::validate(config);
    return config;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

std::string fmt(double v) { return csv::format(v); }

fs::path loss_log_path(const fs::path& model) {
    fs::path p = model;
    return p.replace_extension(".loss.csv");
}

// --- commands -------------------------------------------------------------

int cmd_simulate_weights(const Common& c) {
    const auto config = load(c);
    const auto curves = scene::simulate_weight_curves(config.weights);
    auto out = open_out(c.out);
    scene::write_weight_curves(out, curves);
    if (!out) throw IoError("failed writing " + c.out);
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto peak = scene::peak_index(curves[i].diffuse);
        std::cout << "point " << i << " peak_x=" << fmt(curves[i].unit_x[peak])
                  << " fwhm=" << fmt(scene::full_width_half_max(curves[i].unit_x, curves[i].diffuse)) << '\n';
    }
    return 0;
}

int cmd_gen_dataset(const Common& c) {
    const auto config = load(c);
    const auto frames = experiment::generate_dataset(config);
    experiment::write_dataset(c.out, frames, config.layout);
    std::cout << "frames=" << frames.size() << '\n';
    return 0;
}

std::vector<classifier::LabeledFeatures> features_from_manifest(const fs::path& dir, experiment::Split split,
                                                                const features::FeatureParams& params,
                                                                const features::PreprocessConfig& preprocess) {
    std::vector<classifier::LabeledFeatures> out;
    for (const auto& row : experiment::read_manifest(dir)) {
        if (row.split != split) continue;
        out.push_back({features::extract_features(read_ppm(row.file), params, preprocess), row.label});
    }
    return out;
}

int cmd_train(const Common& c, const TrainFlags& t, const std::string& dataset, const std::string& loss_log) {
    const auto config = load(c, nullptr, &t);
    const auto samples = features_from_manifest(dataset, experiment::Split::Train,
                                                experiment::feature_params_for(config), config.training.preprocess);
    if (samples.empty()) throw DomainError("dataset has no training frames");
    const auto result = experiment::train_model(config, samples);
    classifier::save_model(c.out, result.model);
    const fs::path log = loss_log.empty() ? loss_log_path(c.out) : fs::path(loss_log);
    auto out = open_out(log);
    experiment::write_loss_log(out, result.losses);
    if (!out) throw IoError("failed writing " + log.string());
    std::cout << "samples=" << samples.size() << " batches=" << result.losses.size() << '\n';
    return 0;
}

struct FrameSource {
    std::vector<FaceImage> images;
    std::vector<UnifiedLabel> truth;  // empty without a manifest
};

FrameSource load_frames(const fs::path& dir, std::optional<int> sequence) {
    if (!fs::is_directory(dir)) throw IoError("frames directory " + dir.string() + " does not exist");
    FrameSource src;
    if (fs::exists(dir / "manifest.csv")) {
        auto rows = experiment::read_manifest(dir);
        if (rows.empty()) throw IoError("manifest has no frames");
        if (!sequence) {
            // Default to the first held-out sequence.
            std::optional<int> first_test;
            int first_any = rows.front().sequence;
            for (const auto& r : rows) {
                first_any = std::min(first_any, r.sequence);
                if (r.split == experiment::Split::Test && (!first_test || r.sequence < *first_test)) first_test = r.sequence;
            }
            sequence = first_test ? *first_test : first_any;
        }
        std::erase_if(rows, [&](const auto& r) { return r.sequence != *sequence; });
        if (rows.empty()) throw DomainError("manifest has no sequence " + std::to_string(*sequence));
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
        for (const auto& r : rows) {
            src.images.push_back(read_ppm(r.file));
            src.truth.push_back(r.label);
        }
        return src;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no .ppm frames in " + dir.string());
    for (const auto& f : files) src.images.push_back(read_ppm(f));
    return src;
}

int cmd_attack(const Common& c, const HlcFlags& h, bool use_hlc, const std::string& model_path,
               const std::string& frames_dir, std::optional<int> sequence, const std::string& truth_out) {
    const auto model = classifier::load_model(model_path);
    const auto src = load_frames(frames_dir, sequence);
    std::vector<const FaceImage*> ptrs;
    for (const auto& im : src.images) ptrs.push_back(&im);
    const auto result = experiment::attack(model, ptrs, src.truth, load(c, &h).hlc);
    const auto& labels = use_hlc ? result.corrected : result.predicted;
    auto out = open_out(c.out);
    hlc::write_sequence(out, labels);
    if (!out) throw IoError("failed writing " + c.out);
    if (!truth_out.empty()) {
        if (src.truth.empty()) throw DomainError("no truth manifest to write from");
        hlc::write_sequence(fs::path(truth_out), src.truth);
    }
    if (!src.truth.empty()) {
        std::cout << "accuracy=" << fmt(use_hlc ? result.accuracy_corrected : result.accuracy_raw) << '\n';
    }
    return 0;
}

int cmd_hlc(const Common& c, const HlcFlags& h, const std::string& in) {
    const auto labels = hlc::read_sequence(in);
    const auto corrected = hlc::correct_labels(labels, load(c, &h).hlc);
    hlc::write_sequence(fs::path(c.out), corrected);
    return 0;
}

int cmd_sweep(const Common& c, const std::string& pred, const std::string& truth) {
    const auto labels = hlc::read_sequence(pred);
    const auto ref = hlc::read_sequence(truth);
    const auto grid = hlc::default_sweep_grid();
    const auto rows = hlc::sweep_params(labels, ref, grid);
    auto out = open_out(c.out);
    hlc::write_sweep(out, rows);
    if (!out) throw IoError("failed writing " + c.out);
    const auto best = std::max_element(rows.begin(), rows.end(),
                                       [](const auto& a, const auto& b) { return a.accuracy < b.accuracy; });
    std::cout << "best sigma_s=" << fmt(best->params.sigma_s) << " T_s=" << best->params.t_s
              << " sigma_e=" << fmt(best->params.sigma_e) << " T_e=" << best->params.t_e
              << " accuracy=" << fmt(best->accuracy) << '\n';
    return 0;
}

int cmd_mdc(const Common& c, const std::vector<double>& fractions) {
    auto config = load(c);
    if (!fractions.empty()) config.mdc.fractions = fractions;
    experiment::validate(config);
    const auto result = analysis::mdc_search(config.scene, experiment::mdc_options(config));
    auto out = open_out(c.out);
    analysis::write_mdc_table(out, result);
    if (!out) throw IoError("failed writing " + c.out);
    std::cout << "boundary=" << (result.boundary ? fmt(*result.boundary) : "none") << '\n';
    std::cout << "smallest_distinguishable="
              << (result.smallest_distinguishable ? fmt(*result.smallest_distinguishable) : "none") << '\n';
    return 0;
}

int cmd_run_all(const Common& c, const HlcFlags& h, const TrainFlags& t) {
    const auto config = load(c, &h, &t);
    const fs::path dir = c.out;
    {
        auto out = open_out(dir / "config.json");
        out << experiment::config_to_json(config);
    }
    const auto frames = experiment::generate_dataset(config);
    experiment::write_dataset(dir / "dataset", frames, config.layout);

    const auto samples = experiment::compute_features(frames, experiment::Split::Train,
                                                      experiment::feature_params_for(config), config.training.preprocess);
    const auto trained = experiment::train_model(config, samples);
    classifier::save_model(dir / "model.json", trained.model);
    {
        auto out = open_out(dir / "model.loss.csv");
        experiment::write_loss_log(out, trained.losses);
    }

    const int first = config.dataset.train_sessions;
    const int last = first + config.dataset.test_sessions;
    for (int s = first; s < last; ++s) {
        std::vector<const FaceImage*> ptrs;
        std::vector<UnifiedLabel> truth;
        for (const auto* f : experiment::sequence_frames(frames, s)) {
            ptrs.push_back(&f->image);
            truth.push_back(f->label);
        }
        const auto r = experiment::attack(trained.model, ptrs, truth, config.hlc);
        const std::string id = std::to_string(s);
        hlc::write_sequence(dir / ("pred_" + id + ".csv"), r.predicted);
        hlc::write_sequence(dir / ("corrected_" + id + ".csv"), r.corrected);
        hlc::write_sequence(dir / ("truth_" + id + ".csv"), r.truth);
        std::cout << "sequence=" << s << " accuracy=" << fmt(r.accuracy_raw)
                  << " accuracy_hlc=" << fmt(r.accuracy_corrected) << '\n';
    }
    return 0;
}

int cmd_print_config(const Common& c) {
    const auto config = load(c);
    if (c.out.empty()) {
        std::cout << experiment::config_to_json(config);
    } else {
        auto out = open_out(c.out);
        out << experiment::config_to_json(config);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate screen reflections on a face and infer on-screen applications from them."};
    app.require_subcommand(1);

    Common common;
    HlcFlags hlc_flags;
    TrainFlags train_flags;

    auto* weights = app.add_subcommand("simulate-weights", "Diffuse/specular importance weight curves (CSV)");
    add_common(weights, common);

    auto* gen = app.add_subcommand("gen-dataset", "Render a synthetic labelled frame dataset into a directory");
    add_common(gen, common);

    std::string dataset;
    std::string loss_log;
    auto* train = app.add_subcommand("train", "Train a two-tier model on a generated dataset");
    add_common(train, common);
    add_train(train, train_flags);
    train->add_option("--dataset", dataset, "Dataset directory from gen-dataset")->required();
    train->add_option("--loss-log", loss_log, "Loss CSV (default: model path with .loss.csv)");

    std::string model_path;
    std::string frames_dir;
    std::optional<int> sequence;
    std::string truth_out;
    bool use_hlc = false;
    auto* attack = app.add_subcommand("attack", "Predict one label per frame, optionally HLC-corrected");
    add_common(attack, common);
    add_hlc(attack, hlc_flags);
    attack->add_option("--model", model_path, "Model file from train")->required();
    attack->add_option("--frames", frames_dir, "Dataset directory (with manifest) or a directory of .ppm frames")
        ->required();
    attack->add_option("--sequence", sequence, "Sequence id in the manifest (default: first test sequence)");
    attack->add_option("--truth-out", truth_out, "Also write the manifest labels as a sequence CSV");
    attack->add_flag("--hlc", use_hlc, "Apply heuristic label correction");

    std::string seq_in;
    auto* hlc_cmd = app.add_subcommand("hlc", "Correct a label sequence CSV");
    add_common(hlc_cmd, common);
    add_hlc(hlc_cmd, hlc_flags);
    hlc_cmd->add_option("--in", seq_in, "Sequence CSV (t,label_index)")->required()->check(CLI::ExistingFile);

    std::string pred_in;
    std::string truth_in;
    auto* sweep = app.add_subcommand("sweep", "HLC accuracy over the default parameter grid");
    add_common(sweep, common);
    sweep->add_option("--pred", pred_in, "Predicted sequence CSV")->required()->check(CLI::ExistingFile);
    sweep->add_option("--truth", truth_in, "True sequence CSV")->required()->check(CLI::ExistingFile);

    std::vector<double> fractions;
    auto* mdc = app.add_subcommand("mdc", "Minimally differentiable content search (fraction,min_p CSV)");
    add_common(mdc, common);
    mdc->add_option("--fractions", fractions, "Screen-area fractions, comma separated")->delimiter(',');

    auto* run_all = app.add_subcommand("run-all", "gen-dataset, train, attack and hlc into one directory");
    add_common(run_all, common);
    add_hlc(run_all, hlc_flags);
    add_train(run_all, train_flags);

    auto* print_config = app.add_subcommand("print-config", "Print the effective config with all defaults");
    add_common(print_config, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*weights) return cmd_simulate_weights(common);
        if (*gen) return cmd_gen_dataset(common);
        if (*train) return cmd_train(common, train_flags, dataset, loss_log);
        if (*attack) return cmd_attack(common, hlc_flags, use_hlc, model_path, frames_dir, sequence, truth_out);
        if (*hlc_cmd) return cmd_hlc(common, hlc_flags, seq_in);
        if (*sweep) return cmd_sweep(common, pred_in, truth_in);
        if (*mdc) return cmd_mdc(common, fractions);
        if (*run_all) return cmd_run_all(common, hlc_flags, train_flags);
        if (*print_config) return cmd_print_config(common);
    } catch (const IoError& e) {
        std::cerr << "facetell: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "facetell: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "facetell: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
