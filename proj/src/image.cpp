#include "facetell/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "facetell/error.hpp"

namespace facetell {

FaceImage::FaceImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {
    if (w < 0 || h < 0) throw DomainError("image dimensions must be non-negative");
}

std::uint8_t quantize(double value) {
    const double r = std::floor(value + 0.5);
    if (!(r > 0.0)) return 0;  // also maps NaN to 0
    if (r >= 255.0) return 255;
    return static_cast<std::uint8_t>(r);
}

void write_ppm(std::ostream& out, const FaceImage& image) {
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw IoError("failed writing PPM data");
}

void write_ppm(const std::filesystem::path& path, const FaceImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_ppm(out, image);
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& in) {
    std::string token;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(static_cast<char>(ch));
    }
    return token;
}

int header_int(std::istream& in, const char* what) {
    const std::string tok = header_token(in);
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size() || v < 0) throw IoError("");
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("malformed PPM ") + what);
    }
}

}  // namespace

FaceImage read_ppm(std::istream& in) {
    if (header_token(in) != "P6") throw IoError("not a binary PPM (P6) stream");
    const int w = header_int(in, "width");
    const int h = header_int(in, "height");
    if (header_int(in, "maxval") != 255) throw IoError("only maxval 255 is supported");
    FaceImage image(w, h);
    in.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(image.pixels.size())) {
        throw IoError("truncated PPM pixel data");
    }
    return image;
}

FaceImage read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_ppm(in);
}

}  // namespace facetell
