#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace facetell {

/// 8-bit RGB image, row-major, interleaved channels.
struct FaceImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    FaceImage() = default;
    FaceImage(int w, int h, std::uint8_t fill = 0);

    bool empty() const { return width == 0 || height == 0; }

    std::uint8_t& at(int row, int col, int channel) {
        return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + channel];
    }
    std::uint8_t at(int row, int col, int channel) const {
        return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + channel];
    }

    friend bool operator==(const FaceImage&, const FaceImage&) = default;
};

/// Round half-up, then clamp to [0, 255].
std::uint8_t quantize(double value);

// Binary PPM (P6, maxval 255).
void write_ppm(std::ostream& out, const FaceImage& image);
void write_ppm(const std::filesystem::path& path, const FaceImage& image);
FaceImage read_ppm(std::istream& in);
FaceImage read_ppm(const std::filesystem::path& path);

}  // namespace facetell
