#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "facetell/image.hpp"
#include "facetell/scene.hpp"

namespace facetell::analysis {

/// Per-pixel "B/R above threshold" map; true is drawn white.
struct RatioMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    bool at(int row, int col) const { return bits[static_cast<std::size_t>(row) * width + col] != 0; }
};

/// R = 0 counts as an infinite ratio when B > 0 and as black when B = R = 0.
RatioMask blue_red_ratio_mask(const FaceImage& image, double threshold);

/// White = 255, black = 0 in all three channels.
FaceImage mask_to_image(const RatioMask& mask);

struct KsResult {
    double d = 0.0;
    double p = 1.0;
    std::size_t n = 0;
    std::size_t m = 0;
};

/// Two-sample Kolmogorov-Smirnov statistic sup |ECDF_x - ECDF_y|.
double ks_statistic(std::span<const double> x, std::span<const double> y);

/// Asymptotic two-sided p-value with effective size nm / (n + m) and the
/// small-sample correction lambda = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) d.
double ks_pvalue(double d, std::size_t n, std::size_t m);

KsResult ks_test(std::span<const double> x, std::span<const double> y);

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// Samples of the left and right image halves split at the vertical midline
/// (a centre column of an odd-width image belongs to neither).
struct HalfSamples {
    std::vector<double> left;
    std::vector<double> right;
};

/// Raw B/R per pixel; pixels with B = R = 0 are excluded, R = 0 maps to +inf.
HalfSamples blue_red_ratio_halves(const FaceImage& image);

/// Thresholded B/R bits (0 or 1) per half, same exclusion rule.
HalfSamples ratio_mask_halves(const FaceImage& image, double threshold);

/// Mean of one channel over the left and right halves.
std::pair<double, double> half_channel_means(const FaceImage& image, int channel);

/// Content used for the minimally-differentiable-content search: a dark
/// frame with a centred red-left / blue-right rectangle covering `fraction`
/// of the area (both sides scaled by sqrt(fraction)).
FaceImage shrunk_colorful_content(int width, int height, double fraction);

struct MdcOptions {
    std::vector<double> fractions;
    std::vector<double> thresholds;  // empty selects 0.01, 0.02, ..., 0.99
    double noise_sigma = 2.0;        // per-pixel Gaussian noise, intensity levels
    int content_width = 512;
    int content_height = 288;
    std::uint64_t seed = 0;
};

struct MdcRow {
    double fraction = 0.0;
    double min_p = 1.0;
    double best_threshold = 0.0;
};

struct MdcResult {
    std::vector<MdcRow> rows;
    // Largest fraction whose min p stays >= 0.05, if any.
    std::optional<double> boundary;
    // Smallest fraction with min p < 0.05, if any.
    std::optional<double> smallest_distinguishable;
};

inline constexpr double kSignificance = 0.05;

std::vector<double> default_ratio_sweep();

/// Renders each shrunk content onto the template scene, adds seeded pixel
/// noise and records the lowest left/right KS p-value over the threshold
/// sweep.
MdcResult mdc_search(const scene::SceneSpec& scene_template, const MdcOptions& options);

/// CSV with header `fraction,min_p`.
void write_mdc_table(std::ostream& out, const MdcResult& result);

}  // namespace facetell::analysis
