#include "facetell/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "facetell/error.hpp"
#include "facetell/rng.hpp"

namespace facetell::features {
namespace {

double relu(double v) { return v > 0.0 ? v : 0.0; }
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void require_channels(const Tensor3& t) {
    if (t.channels != kChannels) {
        throw DomainError("expected a " + std::to_string(kChannels) + "-channel tensor, got " +
                          std::to_string(t.channels));
    }
}

// Same-padded 3x3 cross-correlation, 3 -> 3 channels, stride 1.
Tensor3 conv3x3(const Tensor3& in, const Conv3x3& w) {
    Tensor3 out(kChannels, in.height, in.width);
    const int h = in.height;
    const int wd = in.width;
    for (int o = 0; o < kChannels; ++o) {
        double* dst = &out.at(o, 0, 0);
        for (int i = 0; i < kChannels; ++i) {
            const double* src = &in.data[static_cast<std::size_t>(i) * h * wd];
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double k = w[((o * kChannels + i) * 3 + ky) * 3 + kx];
                    const int dy = ky - 1;
                    const int dx = kx - 1;
                    const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                    const int x0 = std::max(0, -dx), x1 = std::min(wd, wd - dx);
                    for (int y = y0; y < y1; ++y) {
                        double* row = dst + static_cast<std::size_t>(y) * wd;
                        const double* srow = src + static_cast<std::size_t>(y + dy) * wd + dx;
                        for (int x = x0; x < x1; ++x) row[x] += k * srow[x];
                    }
                }
            }
        }
    }
    return out;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated tensor header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

Tensor3::Tensor3(int c, int h, int w, double fill)
    : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {
    if (c < 0 || h < 0 || w < 0) throw DomainError("tensor dimensions must be non-negative");
}

FeatureParams random_feature_params(std::uint64_t seed) {
    FeatureParams p;
    p.seed = seed;
    Rng rng(seed);
    for (auto& kernel : p.res_kernels) {
        for (double& v : kernel) v = rng.normal(0.0, kInitStddev);
    }
    for (auto& s : p.res_scale) s.fill(1.0);
    for (auto& s : p.res_shift) s.fill(0.0);
    for (double& v : p.mlp_w1) v = rng.normal(0.0, kInitStddev);
    for (double& v : p.mlp_w2) v = rng.normal(0.0, kInitStddev);
    for (double& v : p.spatial_kernel) v = rng.normal(0.0, kInitStddev);
    return p;
}

FaceImage resample(const FaceImage& image, int out_width, int out_height) {
    if (image.empty()) throw DomainError("cannot resample an empty image");
    if (out_width < 1 || out_height < 1) throw DomainError("output size must be >= 1");
    FaceImage out(out_width, out_height);
    const double sx_scale = static_cast<double>(image.width) / out_width;
    const double sy_scale = static_cast<double>(image.height) / out_height;
    for (int y = 0; y < out_height; ++y) {
        const double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, image.height - 1.0);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, image.height - 1);
        const double fy = sy - y0;
        for (int x = 0; x < out_width; ++x) {
            const double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, image.width - 1.0);
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, image.width - 1);
            const double fx = sx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = image.at(y0, x0, c) * (1.0 - fx) + image.at(y0, x1, c) * fx;
                const double bottom = image.at(y1, x0, c) * (1.0 - fx) + image.at(y1, x1, c) * fx;
                out.at(y, x, c) = quantize(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    return out;
}

FaceImage upscale2x(const FaceImage& image) { return resample(image, image.width * 2, image.height * 2); }

FaceImage resize(const FaceImage& image, int size) {
    if (size < 1) throw DomainError("resize target must be >= 1");
    return resample(image, size, size);
}

Tensor3 znorm(const FaceImage& image) {
    if (image.empty()) throw DomainError("cannot normalize an empty image");
    Tensor3 t(kChannels, image.height, image.width);
    const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
    for (int c = 0; c < kChannels; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += image.pixels[i * 3 + c];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = image.pixels[i * 3 + c] - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / static_cast<double>(n));
        double* dst = &t.data[static_cast<std::size_t>(c) * n];
        if (sd == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) dst[i] = (image.pixels[i * 3 + c] - mean) / sd;
    }
    return t;
}

Tensor3 resblock_forward(const Tensor3& x, const FeatureParams& params) {
    require_channels(x);
    Tensor3 h = x;
    const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;
    for (int s = 0; s < kResStages; ++s) {
        h = conv3x3(h, params.res_kernels[s]);
        for (int c = 0; c < kChannels; ++c) {
            double* v = &h.data[c * plane];
            const double scale = params.res_scale[s][c];
            const double shift = params.res_shift[s][c];
            for (std::size_t i = 0; i < plane; ++i) v[i] = relu(scale * v[i] + shift);
        }
    }
    for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] = relu(h.data[i] + x.data[i]);
    return h;
}

Tensor3 cbam_forward(const Tensor3& c, const FeatureParams& params) {
    require_channels(c);
    const std::size_t plane = static_cast<std::size_t>(c.height) * c.width;
    if (plane == 0) return c;

    std::array<double, kChannels> max_pool{};
    std::array<double, kChannels> avg_pool{};
    for (int ch = 0; ch < kChannels; ++ch) {
        const double* v = &c.data[ch * plane];
        max_pool[ch] = *std::max_element(v, v + plane);
        double sum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) sum += v[i];
        avg_pool[ch] = sum / static_cast<double>(plane);
    }
    auto mlp = [&](const std::array<double, kChannels>& in) {
        std::array<double, kChannels> hidden{};
        std::array<double, kChannels> out{};
        for (int o = 0; o < kChannels; ++o) {
            double a = params.mlp_b1[o];
            for (int i = 0; i < kChannels; ++i) a += params.mlp_w1[o * kChannels + i] * in[i];
            hidden[o] = relu(a);
        }
        for (int o = 0; o < kChannels; ++o) {
            double a = params.mlp_b2[o];
            for (int i = 0; i < kChannels; ++i) a += params.mlp_w2[o * kChannels + i] * hidden[i];
            out[o] = a;
        }
        return out;
    };
    const auto from_max = mlp(max_pool);
    const auto from_avg = mlp(avg_pool);

    Tensor3 refined = c;
    for (int ch = 0; ch < kChannels; ++ch) {
        const double gate = sigmoid(from_max[ch] + from_avg[ch]);
        double* v = &refined.data[ch * plane];
        for (std::size_t i = 0; i < plane; ++i) v[i] *= gate;
    }

    const int h = c.height;
    const int w = c.width;
    std::vector<double> pooled(2 * plane);
    for (std::size_t i = 0; i < plane; ++i) {
        double mx = refined.data[i];
        double sum = refined.data[i];
        for (int ch = 1; ch < kChannels; ++ch) {
            mx = std::max(mx, refined.data[ch * plane + i]);
            sum += refined.data[ch * plane + i];
        }
        pooled[i] = mx;
        pooled[plane + i] = sum / kChannels;
    }

    constexpr int r = kSpatialKernel / 2;
    std::vector<double> attention(plane, params.spatial_bias);
    for (int in = 0; in < 2; ++in) {
        const double* src = &pooled[in * plane];
        for (int ky = 0; ky < kSpatialKernel; ++ky) {
            for (int kx = 0; kx < kSpatialKernel; ++kx) {
                const double k = params.spatial_kernel[(in * kSpatialKernel + ky) * kSpatialKernel + kx];
                const int dy = ky - r;
                const int dx = kx - r;
                const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                for (int y = y0; y < y1; ++y) {
                    double* row = &attention[static_cast<std::size_t>(y) * w];
                    const double* srow = src + static_cast<std::size_t>(y + dy) * w + dx;
                    for (int x = x0; x < x1; ++x) row[x] += k * srow[x];
                }
            }
        }
    }
    for (double& a : attention) a = sigmoid(a);
    for (int ch = 0; ch < kChannels; ++ch) {
        double* v = &refined.data[ch * plane];
        for (std::size_t i = 0; i < plane; ++i) v[i] *= attention[i];
    }
    return refined;
}

std::vector<double> pooled_features(const Tensor3& s, int grid) {
    if (grid < 1) throw DomainError("pooling grid must be >= 1");
    if (grid > std::min(s.height, s.width)) throw DomainError("pooling grid larger than the feature map");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(s.channels) * (2 + static_cast<std::size_t>(grid) * grid));
    const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
    for (int c = 0; c < s.channels; ++c) {
        const double* v = &s.data[c * plane];
        double mean = 0.0;
        for (std::size_t i = 0; i < plane; ++i) mean += v[i];
        mean /= static_cast<double>(plane);
        double var = 0.0;
        for (std::size_t i = 0; i < plane; ++i) var += (v[i] - mean) * (v[i] - mean);
        out.push_back(mean);
        out.push_back(std::sqrt(var / static_cast<double>(plane)));
        for (int gy = 0; gy < grid; ++gy) {
            const int y0 = gy * s.height / grid, y1 = (gy + 1) * s.height / grid;
            for (int gx = 0; gx < grid; ++gx) {
                const int x0 = gx * s.width / grid, x1 = (gx + 1) * s.width / grid;
                double sum = 0.0;
                for (int y = y0; y < y1; ++y) {
                    for (int x = x0; x < x1; ++x) sum += s.at(c, y, x);
                }
                out.push_back(sum / (static_cast<double>(y1 - y0) * (x1 - x0)));
            }
        }
    }
    return out;
}

std::vector<double> extract_features(const FaceImage& image, const FeatureParams& params,
                                     const PreprocessConfig& config) {
    const auto normalized = znorm(resize(upscale2x(image), config.size));
    return pooled_features(cbam_forward(resblock_forward(normalized, params), params), config.grid);
}

void write_tensor(std::ostream& out, const Tensor3& t) {
    out.write("FTT1", 4);
    write_u32(out, static_cast<std::uint32_t>(t.channels));
    write_u32(out, static_cast<std::uint32_t>(t.height));
    write_u32(out, static_cast<std::uint32_t>(t.width));
    for (double v : t.data) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
        out.write(reinterpret_cast<const char*>(b), 8);
    }
    if (!out) throw IoError("failed writing tensor");
}

void write_tensor(const std::filesystem::path& path, const Tensor3& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_tensor(out, t);
}

Tensor3 read_tensor(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "FTT1", 4) != 0) throw IoError("not an FTT1 tensor");
    const auto c = read_u32(in);
    const auto h = read_u32(in);
    const auto w = read_u32(in);
    Tensor3 t(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
    for (double& v : t.data) {
        unsigned char b[8];
        if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated tensor data");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        v = std::bit_cast<double>(bits);
    }
    return t;
}

Tensor3 read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_tensor(in);
}

}  // namespace facetell::features
