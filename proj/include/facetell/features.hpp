#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "facetell/image.hpp"

/// Face-image preprocessing and the frozen convolutional feature extractor
/// (residual block followed by channel and spatial attention).
namespace facetell::features {

/// Dense channel x height x width tensor, row-major CHW.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int c, int h, int w, double fill = 0.0);

    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;
};

inline constexpr int kChannels = 3;
inline constexpr int kResStages = 3;
inline constexpr int kSpatialKernel = 7;

/// Weights of a 3x3 convolution from 3 to 3 channels, indexed
/// [out][in][ky][kx].
using Conv3x3 = std::array<double, kChannels * kChannels * 9>;

struct FeatureParams {
    std::array<Conv3x3, kResStages> res_kernels{};
    // Per-stage, per-channel normalization affine (frozen 1 / 0).
    std::array<std::array<double, kChannels>, kResStages> res_scale{};
    std::array<std::array<double, kChannels>, kResStages> res_shift{};
    // Shared channel-attention MLP, 3 -> 3 -> 3, weights row-major [out][in].
    std::array<double, kChannels * kChannels> mlp_w1{};
    std::array<double, kChannels> mlp_b1{};
    std::array<double, kChannels * kChannels> mlp_w2{};
    std::array<double, kChannels> mlp_b2{};
    // Spatial-attention kernel [in][ky][kx]; input 0 is the channel max map,
    // input 1 the channel mean map.
    std::array<double, 2 * kSpatialKernel * kSpatialKernel> spatial_kernel{};
    double spatial_bias = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const FeatureParams&, const FeatureParams&) = default;
};

inline constexpr double kInitStddev = 0.1;

/// Seeded Gaussian (std 0.1) weights, zero biases, identity affine.
FeatureParams random_feature_params(std::uint64_t seed);

/// Bilinear resampling with half-pixel centres and edge clamping; rounds half-up.
FaceImage resample(const FaceImage& image, int out_width, int out_height);

/// Stand-in for the super-resolution stage: exact 2x bilinear upscale.
FaceImage upscale2x(const FaceImage& image);

FaceImage resize(const FaceImage& image, int size);

/// Per-channel z-score with population statistics; a constant channel maps
/// to zeros.
Tensor3 znorm(const FaceImage& image);

Tensor3 resblock_forward(const Tensor3& x, const FeatureParams& params);

Tensor3 cbam_forward(const Tensor3& c, const FeatureParams& params);

/// Per channel: global mean, global std and the P x P grid-cell means,
/// concatenated channel-major (length 3 (2 + P^2)).
std::vector<double> pooled_features(const Tensor3& s, int grid);

inline constexpr std::size_t feature_length(int grid) {
    return static_cast<std::size_t>(kChannels) * (2 + static_cast<std::size_t>(grid) * grid);
}

struct PreprocessConfig {
    int size = 64;  // L
    int grid = 4;   // P
    friend bool operator==(const PreprocessConfig&, const PreprocessConfig&) = default;
};

/// upscale2x -> resize -> znorm -> resblock -> cbam -> pooled features.
std::vector<double> extract_features(const FaceImage& image, const FeatureParams& params,
                                     const PreprocessConfig& config);

// Flat binary tensor format: "FTT1", channels/height/width as little-endian
// uint32, then little-endian float64 values.
void write_tensor(std::ostream& out, const Tensor3& t);
void write_tensor(const std::filesystem::path& path, const Tensor3& t);
Tensor3 read_tensor(std::istream& in);
Tensor3 read_tensor(const std::filesystem::path& path);

}  // namespace facetell::features
