#include "facetell/scene.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "facetell/csv.hpp"
#include "facetell/error.hpp"

namespace facetell::scene {

ScreenModel screen_from_image(const FaceImage& content, const ScreenSpec& spec) {
    if (content.empty()) throw DomainError("screen content image is empty");
    if (spec.rows < 1 || spec.cols < 1) throw DomainError("screen grid must be at least 1x1");
    if (spec.rows > content.height || spec.cols > content.width) {
        throw DomainError("screen grid exceeds content resolution");
    }
    if (!(spec.width > 0.0 && spec.height > 0.0)) throw DomainError("screen dimensions must be > 0");
    if (!(spec.radiance_scale >= 0.0)) throw DomainError("radiance scale must be >= 0");

    const Vec3 normal = normalized(spec.placement.normal);
    const Vec3 right = normalized(cross(spec.placement.up, normal));
    const Vec3 up = cross(normal, right);

    ScreenModel screen;
    screen.rows = spec.rows;
    screen.cols = spec.cols;
    screen.width = spec.width;
    screen.height = spec.height;
    screen.placement = {spec.placement.center, normal, up};
    screen.units.reserve(static_cast<std::size_t>(spec.rows) * spec.cols);

    for (int r = 0; r < spec.rows; ++r) {
        const int y0 = r * content.height / spec.rows;
        const int y1 = (r + 1) * content.height / spec.rows;
        for (int c = 0; c < spec.cols; ++c) {
            const int x0 = c * content.width / spec.cols;
            const int x1 = (c + 1) * content.width / spec.cols;
            double sum[3] = {0.0, 0.0, 0.0};
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    for (int ch = 0; ch < 3; ++ch) sum[ch] += content.at(y, x, ch);
                }
            }
            const double count = static_cast<double>(y1 - y0) * (x1 - x0);
            EmitterUnit unit;
            const double across = ((c + 0.5) / spec.cols - 0.5) * spec.width;
            const double along = (0.5 - (r + 0.5) / spec.rows) * spec.height;
            unit.position = spec.placement.center + right * across + up * along;
            for (int ch = 0; ch < 3; ++ch) unit.radiance[ch] = sum[ch] / count / 255.0 * spec.radiance_scale;
            screen.units.push_back(unit);
        }
    }
    return screen;
}

FaceModel build_face(const FaceSpec& spec) {
    const Vec3& ax = spec.semi_axes;
    if (!(ax.x > 0.0 && ax.y > 0.0 && ax.z > 0.0)) throw DomainError("face semi-axes must be > 0");
    if (spec.cols < 2 || spec.rows < 2) throw DomainError("face grid must be at least 2x2");
    if (!(spec.half_width_angle > 0.0 && spec.half_width_angle < 1.5707963267948966 &&
          spec.half_height_angle > 0.0 && spec.half_height_angle < 1.5707963267948966)) {
        throw DomainError("face patch half-angles must lie in (0, pi/2)");
    }

    FaceModel face;
    face.cols = spec.cols;
    face.rows = spec.rows;
    face.center = spec.center;
    face.semi_axes = ax;
    face.points.reserve(static_cast<std::size_t>(spec.cols) * spec.rows);
    for (int v = 0; v < spec.rows; ++v) {
        const double lat = spec.half_height_angle * (1.0 - 2.0 * v / (spec.rows - 1));
        for (int u = 0; u < spec.cols; ++u) {
            const double lon = spec.half_width_angle * (2.0 * u / (spec.cols - 1) - 1.0);
            const Vec3 local{ax.x * std::cos(lat) * std::sin(lon), ax.y * std::sin(lat),
                             -ax.z * std::cos(lat) * std::cos(lon)};
            FacePoint p;
            p.position = spec.center + local;
            p.normal = normalized(Vec3{local.x / (ax.x * ax.x), local.y / (ax.y * ax.y), local.z / (ax.z * ax.z)});
            p.k_d = spec.coeffs.k_d;
            p.k_s = spec.coeffs.k_s;
            p.k_a = spec.coeffs.k_a;
            p.n_s = spec.coeffs.n_s;
            optics::validate(p);
            face.points.push_back(p);
        }
    }
    return face;
}

void validate(const Scene& scene) {
    if (scene.screen.units.empty()) throw DomainError("screen has no units");
    if (scene.face.points.empty()) throw DomainError("face has no points");
    optics::validate(scene.optics);
    if (scene.exposure && !(*scene.exposure > 0.0)) throw DomainError("exposure must be > 0");
    const Vec3 rel = scene.camera - scene.face.center;
    const Vec3& ax = scene.face.semi_axes;
    const double inside = (rel.x / ax.x) * (rel.x / ax.x) + (rel.y / ax.y) * (rel.y / ax.y) +
                          (rel.z / ax.z) * (rel.z / ax.z);
    if (inside <= 1.0) throw DomainError("camera is inside the face ellipsoid");
    const auto& pl = scene.screen.placement;
    for (const auto& p : scene.face.points) {
        if (!(dot(p.position - pl.center, pl.normal) > 0.0)) {
            throw DomainError("face is not entirely in front of the screen plane");
        }
    }
}

Scene build_scene(const SceneSpec& spec, const FaceImage& content) {
    Scene scene;
    scene.screen = screen_from_image(content, spec.screen);
    scene.face = build_face(spec.face);
    scene.camera = spec.camera;
    scene.optics = spec.optics;
    scene.exposure = spec.exposure;
    validate(scene);
    return scene;
}

RadianceMap render_radiance(const Scene& scene) {
    validate(scene);
    RadianceMap map;
    map.width = scene.face.cols;
    map.height = scene.face.rows;
    map.values.reserve(scene.face.points.size());
    const std::span<const EmitterUnit> units(scene.screen.units);
    for (const auto& p : scene.face.points) {
        map.values.push_back(optics::reflected_intensity_planar(p, units, scene.screen.placement.normal,
                                                                scene.camera, scene.optics));
    }
    return map;
}

LightTransport build_transport(const Scene& scene) {
    validate(scene);
    LightTransport t;
    t.width = scene.face.cols;
    t.height = scene.face.rows;
    t.units = scene.screen.units.size();
    t.weights.reserve(scene.face.points.size() * t.units);
    const Vec3& normal = scene.screen.placement.normal;
    const Vec3& origin = scene.screen.units.front().position;
    for (const auto& p : scene.face.points) {
        const double d0 = dot(p.position - origin, normal);
        t.inv_d0_sq.push_back(1.0 / (d0 * d0));
        t.ambient.push_back(scene.optics.ambient * p.k_a);
        for (const auto& e : scene.screen.units) {
            const auto a = optics::pair_angles(e.position, normal, p, scene.camera);
            t.weights.push_back(p.k_d * optics::diffuse_weight_cos(a.cos_e, a.cos_r, scene.optics.g) +
                                p.k_s * optics::specular_weight_cos(a.cos_e, a.cos_m, scene.optics.g, p.n_s));
        }
    }
    return t;
}

RadianceMap apply_transport(const LightTransport& transport, std::span<const EmitterUnit> units,
                            double screen_gain, double ambient_gain) {
    if (units.size() != transport.units) throw DomainError("emitter count does not match the light transport");
    RadianceMap map;
    map.width = transport.width;
    map.height = transport.height;
    const std::size_t points = transport.inv_d0_sq.size();
    map.values.resize(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double* w = &transport.weights[i * transport.units];
        Rgb sum{0.0, 0.0, 0.0};
        for (std::size_t u = 0; u < transport.units; ++u) {
            for (int c = 0; c < 3; ++c) sum[c] += units[u].radiance[c] * w[u];
        }
        for (int c = 0; c < 3; ++c) {
            map.values[i][c] = sum[c] * transport.inv_d0_sq[i] * screen_gain + transport.ambient[i][c] * ambient_gain;
        }
    }
    return map;
}

double resolve_exposure(const RadianceMap& radiance, std::optional<double> exposure) {
    if (exposure) {
        if (!(*exposure > 0.0)) throw DomainError("exposure must be > 0");
        return *exposure;
    }
    std::vector<double> channel_values;
    channel_values.reserve(radiance.values.size() * 3);
    for (const auto& v : radiance.values) channel_values.insert(channel_values.end(), v.begin(), v.end());
    if (channel_values.empty()) throw DomainError("nothing to expose");
    // Nearest-rank percentile.
    const auto rank = static_cast<std::size_t>(
        std::ceil(kAutoExposurePercentile * static_cast<double>(channel_values.size())));
    const auto nth = channel_values.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(rank, 1) - 1);
    std::nth_element(channel_values.begin(), nth, channel_values.end());
    if (!(*nth > 0.0)) throw DomainError("auto exposure has no reference level (image is black)");
    return kAutoExposureTarget / *nth;
}

FaceImage expose(const RadianceMap& radiance, double exposure) {
    FaceImage image(radiance.width, radiance.height);
    for (std::size_t i = 0; i < radiance.values.size(); ++i) {
        for (int c = 0; c < 3; ++c) image.pixels[i * 3 + c] = quantize(exposure * radiance.values[i][c]);
    }
    return image;
}

FaceImage render_face(const Scene& scene) {
    const RadianceMap map = render_radiance(scene);
    return expose(map, resolve_exposure(map, scene.exposure));
}

std::vector<WeightCurve> simulate_weight_curves(const CrossSectionLayout& layout) {
    if (layout.units < 1) throw DomainError("cross-section needs at least one screen unit");
    if (!(layout.screen_x1 > layout.screen_x0)) throw DomainError("screen segment must have positive length");
    const Vec3 screen_normal{0.0, 1.0, 0.0};
    const Vec3 camera{layout.camera_x, 0.0, 0.0};
    const double pitch = (layout.screen_x1 - layout.screen_x0) / layout.units;

    std::vector<WeightCurve> curves;
    for (const auto& cp : layout.points) {
        if (!(cp.y > 0.0)) throw DomainError("face points must lie above the screen line");
        FacePoint p;
        p.position = {cp.x, cp.y, 0.0};
        p.normal = normalized(Vec3{cp.normal_x, cp.normal_y, 0.0});
        p.n_s = layout.n_s;

        WeightCurve curve;
        for (int i = 0; i < layout.units; ++i) {
            const double x = layout.screen_x0 + (i + 0.5) * pitch;
            const auto a = optics::pair_angles({x, 0.0, 0.0}, screen_normal, p, camera);
            curve.unit_x.push_back(x);
            curve.diffuse.push_back(optics::diffuse_weight_cos(a.cos_e, a.cos_r, layout.g));
            curve.specular.push_back(optics::specular_weight_cos(a.cos_e, a.cos_m, layout.g, layout.n_s));
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

int count_local_maxima(std::span<const double> values) {
    std::vector<double> runs;
    for (double v : values) {
        if (runs.empty() || runs.back() != v) runs.push_back(v);
    }
    if (runs.size() < 2) return 0;
    int count = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const bool above_left = i == 0 || runs[i] > runs[i - 1];
        const bool above_right = i + 1 == runs.size() || runs[i] > runs[i + 1];
        if (above_left && above_right) ++count;
    }
    return count;
}

std::size_t peak_index(std::span<const double> values) {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

double full_width_half_max(std::span<const double> xs, std::span<const double> values) {
    if (xs.size() != values.size() || values.empty()) throw DomainError("curve sizes mismatch");
    const std::size_t peak = peak_index(values);
    const double half = values[peak] / 2.0;
    auto crossing = [&](std::size_t inside, std::size_t outside) {
        const double t = (values[inside] - half) / (values[inside] - values[outside]);
        return xs[inside] + t * (xs[outside] - xs[inside]);
    };
    std::size_t lo = peak;
    while (lo > 0 && values[lo - 1] >= half) --lo;
    std::size_t hi = peak;
    while (hi + 1 < values.size() && values[hi + 1] >= half) ++hi;
    const double left = lo > 0 ? crossing(lo, lo - 1) : xs[lo];
    const double right = hi + 1 < values.size() ? crossing(hi, hi + 1) : xs[hi];
    return right - left;
}

void write_weight_curves(std::ostream& out, std::span<const WeightCurve> curves) {
    out << "unit_x,G_d,G_s\n";
    for (std::size_t k = 0; k < curves.size(); ++k) {
        if (k > 0) out << '\n';
        const auto& c = curves[k];
        for (std::size_t i = 0; i < c.unit_x.size(); ++i) {
            out << csv::format(c.unit_x[i]) << ',' << csv::format(c.diffuse[i]) << ','
                << csv::format(c.specular[i]) << '\n';
        }
    }
}

}  // namespace facetell::scene
