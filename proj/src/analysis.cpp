#include "facetell/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "facetell/csv.hpp"
#include "facetell/error.hpp"
#include "facetell/rng.hpp"

namespace facetell::analysis {
namespace {

// Ratio of blue to red for one pixel; nullopt when both are zero.
std::optional<double> blue_red(std::uint8_t r, std::uint8_t b) {
    if (r == 0) {
        if (b == 0) return std::nullopt;
        return std::numeric_limits<double>::infinity();
    }
    return static_cast<double>(b) / static_cast<double>(r);
}

template <typename Fn>
HalfSamples collect_halves(const FaceImage& image, Fn&& value) {
    HalfSamples out;
    const int half = image.width / 2;
    const bool odd = image.width % 2 != 0;
    for (int row = 0; row < image.height; ++row) {
        for (int col = 0; col < image.width; ++col) {
            if (odd && col == half) continue;
            const auto ratio = blue_red(image.at(row, col, 0), image.at(row, col, 2));
            if (!ratio) continue;
            (col < half ? out.left : out.right).push_back(value(*ratio));
        }
    }
    return out;
}

}  // namespace

RatioMask blue_red_ratio_mask(const FaceImage& image, double threshold) {
    if (!(threshold > 0.0)) throw DomainError("ratio threshold must be > 0");
    if (image.empty()) throw DomainError("image is empty");
    RatioMask mask{image.width, image.height, std::vector<std::uint8_t>(static_cast<std::size_t>(image.width) * image.height)};
    for (int row = 0; row < image.height; ++row) {
        for (int col = 0; col < image.width; ++col) {
            const auto ratio = blue_red(image.at(row, col, 0), image.at(row, col, 2));
            mask.bits[static_cast<std::size_t>(row) * image.width + col] = ratio && *ratio > threshold;
        }
    }
    return mask;
}

FaceImage mask_to_image(const RatioMask& mask) {
    FaceImage image(mask.width, mask.height);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        const std::uint8_t v = mask.bits[i] ? 255 : 0;
        image.pixels[i * 3] = image.pixels[i * 3 + 1] = image.pixels[i * 3 + 2] = v;
    }
    return image;
}

double ks_statistic(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw DomainError("KS samples must be non-empty");
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> b(y.begin(), y.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return d;
}

double kolmogorov_q(double lambda) {
    constexpr double kTermFloor = 1e-12;
    if (!(lambda > 0.0)) return 1.0;
    double q = 0.0;
    if (lambda < 1.18) {
        // The alternating series converges too slowly here; use its Jacobi
        // theta transform, 1 - sqrt(2 pi) / lambda * sum exp(-(2k-1)^2 pi^2 / (8 lambda^2)).
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double sum = 0.0;
        for (int k = 1;; ++k) {
            const double odd = 2.0 * k - 1.0;
            const double term = std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
            sum += term;
            if (term < kTermFloor) break;
        }
        q = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
    } else {
        double sign = 1.0;
        for (int k = 1;; ++k) {
            const double term = std::exp(-2.0 * k * k * lambda * lambda);
            q += sign * term;
            sign = -sign;
            if (term < kTermFloor) break;
        }
        q *= 2.0;
    }
    return std::clamp(q, 0.0, 1.0);
}

double ks_pvalue(double d, std::size_t n, std::size_t m) {
    if (!(d >= 0.0 && d <= 1.0)) throw DomainError("KS statistic must lie in [0, 1]");
    if (n < 1 || m < 1) throw DomainError("KS sample sizes must be >= 1");
    if (d == 0.0) return 1.0;
    const double ne = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
    const double root = std::sqrt(ne);
    return kolmogorov_q((root + 0.12 + 0.11 / root) * d);
}

KsResult ks_test(std::span<const double> x, std::span<const double> y) {
    KsResult r;
    r.d = ks_statistic(x, y);
    r.n = x.size();
    r.m = y.size();
    r.p = ks_pvalue(r.d, r.n, r.m);
    return r;
}

HalfSamples blue_red_ratio_halves(const FaceImage& image) {
    return collect_halves(image, [](double ratio) { return ratio; });
}

HalfSamples ratio_mask_halves(const FaceImage& image, double threshold) {
    if (!(threshold > 0.0)) throw DomainError("ratio threshold must be > 0");
    return collect_halves(image, [threshold](double ratio) { return ratio > threshold ? 1.0 : 0.0; });
}

std::pair<double, double> half_channel_means(const FaceImage& image, int channel) {
    if (channel < 0 || channel > 2) throw DomainError("channel must be 0, 1 or 2");
    const int half = image.width / 2;
    const bool odd = image.width % 2 != 0;
    double left = 0.0, right = 0.0;
    std::size_t nl = 0, nr = 0;
    for (int row = 0; row < image.height; ++row) {
        for (int col = 0; col < image.width; ++col) {
            if (odd && col == half) continue;
            if (col < half) {
                left += image.at(row, col, channel);
                ++nl;
            } else {
                right += image.at(row, col, channel);
                ++nr;
            }
        }
    }
    if (nl == 0 || nr == 0) throw DomainError("image too narrow to split into halves");
    return {left / static_cast<double>(nl), right / static_cast<double>(nr)};
}

FaceImage shrunk_colorful_content(int width, int height, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("area fraction must lie in (0, 1]");
    if (width < 2 || height < 1) throw DomainError("content must be at least 2x1 pixels");
    FaceImage image(width, height);
    const double scale = std::sqrt(fraction);
    const int w = std::max(2, static_cast<int>(std::lround(width * scale)));
    const int h = std::max(1, static_cast<int>(std::lround(height * scale)));
    const int x0 = (width - w) / 2;
    const int y0 = (height - h) / 2;
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) {
            const bool left = x - x0 < w / 2;
            image.at(y, x, left ? 0 : 2) = 255;
        }
    }
    return image;
}

std::vector<double> default_ratio_sweep() {
    std::vector<double> t;
    for (int i = 1; i <= 99; ++i) t.push_back(i / 100.0);
    return t;
}

MdcResult mdc_search(const scene::SceneSpec& scene_template, const MdcOptions& options) {
    if (options.fractions.empty()) throw DomainError("no area fractions given");
    if (!(options.noise_sigma >= 0.0)) throw DomainError("noise sigma must be >= 0");
    const auto thresholds = options.thresholds.empty() ? default_ratio_sweep() : options.thresholds;

    MdcResult result;
    for (std::size_t fi = 0; fi < options.fractions.size(); ++fi) {
        const double fraction = options.fractions[fi];
        const auto content = shrunk_colorful_content(options.content_width, options.content_height, fraction);
        const auto scene = scene::build_scene(scene_template, content);
        const auto radiance = scene::render_radiance(scene);
        const double exposure = scene::resolve_exposure(radiance, scene.exposure);

        Rng rng(Rng::derive(options.seed, fi));
        FaceImage image(radiance.width, radiance.height);
        for (std::size_t i = 0; i < radiance.values.size(); ++i) {
            for (int c = 0; c < 3; ++c) {
                image.pixels[i * 3 + c] = quantize(exposure * radiance.values[i][c] + options.noise_sigma * rng.normal());
            }
        }

        MdcRow row{fraction, 1.0, thresholds.front()};
        for (double t : thresholds) {
            const auto halves = ratio_mask_halves(image, t);
            if (halves.left.empty() || halves.right.empty()) continue;
            const double p = ks_test(halves.left, halves.right).p;
            if (p < row.min_p) {
                row.min_p = p;
                row.best_threshold = t;
            }
        }
        result.rows.push_back(row);
    }

    for (const auto& row : result.rows) {
        if (row.min_p >= kSignificance) {
            if (!result.boundary || row.fraction > *result.boundary) result.boundary = row.fraction;
        } else if (!result.smallest_distinguishable || row.fraction < *result.smallest_distinguishable) {
            result.smallest_distinguishable = row.fraction;
        }
    }
    return result;
}

void write_mdc_table(std::ostream& out, const MdcResult& result) {
    out << "fraction,min_p\n";
    for (const auto& row : result.rows) out << csv::format(row.fraction) << ',' << csv::format(row.min_p) << '\n';
}

}  // namespace facetell::analysis
