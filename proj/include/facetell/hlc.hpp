#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "facetell/classifier.hpp"

/// Heuristic label correction: rewrites a noisy per-frame label sequence
/// into a step function of detected application-usage intervals.
namespace facetell::hlc {

using classifier::UnifiedLabel;

struct LabelSequence {
    std::vector<UnifiedLabel> labels;
    double timestep = 0.5;  // seconds between frames
};

struct HlcParams {
    double sigma_s = 0.90;  // start threshold, [0.5, 1)
    int t_s = 10;           // start window, >= 1
    double sigma_e = 0.10;  // end threshold, (0, 0.5]
    int t_e = 10;           // longest end window offset, >= 0

    friend bool operator==(const HlcParams&, const HlcParams&) = default;
};

void validate(const HlcParams& params);

/// Positions equal to `label`; UNKNOWN only equals UNKNOWN.
int count_label(UnifiedLabel label, std::span<const UnifiedLabel> segment);

/// A step starts at 1-based `t` when y_t fills at least sigma_s of the window
/// y_t .. y_{t+T_s-1} (truncated at the sequence end). UNKNOWN never starts.
bool start_of_step(std::span<const UnifiedLabel> labels, int t, const HlcParams& params);

/// The step labelled `step_label` ends at 1-based `t` unless some prefix
/// y_t .. y_{t+tau}, 0 <= tau <= min(T_e, T - t), holds the label with
/// proportion >= sigma_e.
bool end_of_step(std::span<const UnifiedLabel> labels, UnifiedLabel step_label, int t, const HlcParams& params);

std::vector<UnifiedLabel> correct_labels(std::span<const UnifiedLabel> labels, const HlcParams& params);
LabelSequence correct_labels(const LabelSequence& sequence, const HlcParams& params);

struct SweepRow {
    HlcParams params;
    double accuracy = 0.0;
};

/// Accuracy of the corrected sequence against `truth` for every grid point.
std::vector<SweepRow> sweep_params(std::span<const UnifiedLabel> labels, std::span<const UnifiedLabel> truth,
                                   std::span<const HlcParams> grid);

/// sigma_s in {0.6, 0.7, 0.8, 0.9}, T_s in {4, 6, 8, 10},
/// sigma_e in {0.1, 0.2, 0.3, 0.4}, T_e in {4, 6, 8, 10}.
std::vector<HlcParams> default_sweep_grid();

// Sequence CSV: header `t,label_index`, -1 encodes UNKNOWN.
void write_sequence(std::ostream& out, std::span<const UnifiedLabel> labels);
void write_sequence(const std::filesystem::path& path, std::span<const UnifiedLabel> labels);
std::vector<UnifiedLabel> read_sequence(const std::filesystem::path& path);

// Sweep CSV: header `sigma_s,T_s,sigma_e,T_e,accuracy`.
void write_sweep(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace facetell::hlc
