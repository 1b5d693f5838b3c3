#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "facetell/image.hpp"
#include "facetell/optics.hpp"

namespace facetell::scene {

using optics::EmitterUnit;
using optics::FacePoint;
using optics::OpticsConfig;

/// Where a screen sits: its center, facing normal and in-plane up vector.
struct ScreenPlacement {
    Vec3 center{0.0, 0.0, 0.0};
    Vec3 normal{0.0, 0.0, 1.0};
    Vec3 up{0.0, 1.0, 0.0};
};

/// Planar grid of emitters. Units are row-major, row 0 at the top edge and
/// column 0 at the left edge as seen by a viewer facing the screen.
struct ScreenModel {
    int rows = 0;
    int cols = 0;
    double width = 0.0;
    double height = 0.0;
    ScreenPlacement placement;
    std::vector<EmitterUnit> units;

    const EmitterUnit& unit(int row, int col) const { return units[static_cast<std::size_t>(row) * cols + col]; }
};

struct ScreenSpec {
    double width = 0.344;   // m
    double height = 0.194;  // m
    int rows = 18;
    int cols = 32;
    double radiance_scale = 100.0;
    ScreenPlacement placement;
};

/// Discretizes content into emitters: each unit's radiance is the mean RGB of
/// its image cell mapped linearly to value / 255 * radiance_scale.
ScreenModel screen_from_image(const FaceImage& content, const ScreenSpec& spec);

struct FaceCoefficients {
    double k_d = 0.6;
    double k_s = 0.3;
    double k_a = 0.5;
    double n_s = optics::kDefaultShininess;
};

/// Ellipsoid face patch. Axes are world-aligned; the face looks toward -z.
struct FaceSpec {
    Vec3 center{0.0, 0.0, 0.45};
    Vec3 semi_axes{0.075, 0.1, 0.09};
    int cols = 32;  // U, horizontal samples (left to right, increasing x)
    int rows = 32;  // V, vertical samples (top to bottom, decreasing y)
    double half_width_angle = 1.2;   // rad, longitude extent of the patch
    double half_height_angle = 1.2;  // rad, latitude extent of the patch
    FaceCoefficients coeffs;
};

struct FaceModel {
    int cols = 0;
    int rows = 0;
    Vec3 center;
    Vec3 semi_axes;
    std::vector<FacePoint> points;  // row-major, rows x cols

    const FacePoint& point(int row, int col) const { return points[static_cast<std::size_t>(row) * cols + col]; }
};

FaceModel build_face(const FaceSpec& spec);

struct Scene {
    ScreenModel screen;
    FaceModel face;
    Vec3 camera{0.0, 0.107, 0.0};
    OpticsConfig optics;
    std::optional<double> exposure;  // nullopt selects auto exposure
};

void validate(const Scene& scene);

/// Everything needed to build a Scene around arbitrary screen content.
struct SceneSpec {
    ScreenSpec screen;
    FaceSpec face;
    Vec3 camera{0.0, 0.107, 0.0};
    OpticsConfig optics{optics::kDefaultAngularExponent, {0.6, 0.6, 0.6}};
    std::optional<double> exposure;
};

Scene build_scene(const SceneSpec& spec, const FaceImage& content);

/// Linear radiance per face point, same layout as FaceModel::points.
struct RadianceMap {
    int width = 0;
    int height = 0;
    std::vector<Rgb> values;
};

RadianceMap render_radiance(const Scene& scene);

/// Precomputed per-(face point, screen unit) weights of the planar model, for
/// re-lighting a fixed geometry with many screen contents. Applying it gives
/// bit-identical results to render_radiance on the same scene.
struct LightTransport {
    int width = 0;
    int height = 0;
    std::size_t units = 0;
    std::vector<double> weights;       // points x units, k_d G_d + k_s G_s
    std::vector<double> inv_d0_sq;     // per point
    std::vector<Rgb> ambient;          // per point, k_a I_a
};

LightTransport build_transport(const Scene& scene);

/// Radiance for the given emitter radiances (positions are taken from the
/// scene the transport was built for).
RadianceMap apply_transport(const LightTransport& transport, std::span<const EmitterUnit> units,
                            double screen_gain = 1.0, double ambient_gain = 1.0);

inline constexpr double kAutoExposurePercentile = 0.99;
inline constexpr double kAutoExposureTarget = 240.0;

/// Fixed exposure, or the scale mapping the 99th-percentile channel value to 240.
double resolve_exposure(const RadianceMap& radiance, std::optional<double> exposure);

FaceImage expose(const RadianceMap& radiance, double exposure);

/// Renders the face in parametric (u, v) space: pixel (row, col) is the
/// quantized exposed radiance of face point (row, col).
FaceImage render_face(const Scene& scene);

// ---------------------------------------------------------------------------
// Weight-curve simulation in a 2D cross-section: the screen lies on the
// x-axis with normal +y; face points sit above it.

struct CrossSectionPoint {
    double x = 0.0;
    double y = 0.0;
    double normal_x = 0.0;
    double normal_y = -1.0;
};

struct CrossSectionLayout {
    double screen_x0 = -0.17;
    double screen_x1 = 0.17;
    int units = 101;
    double camera_x = 0.0;
    std::vector<CrossSectionPoint> points;
    double g = optics::kDefaultAngularExponent;
    double n_s = optics::kDefaultShininess;
};

struct WeightCurve {
    std::vector<double> unit_x;
    std::vector<double> diffuse;   // G_d per unit
    std::vector<double> specular;  // G_s per unit
};

std::vector<WeightCurve> simulate_weight_curves(const CrossSectionLayout& layout);

/// Strict local maxima after collapsing equal neighbours; plateaus at the
/// ends count only if they rise above their single neighbour.
int count_local_maxima(std::span<const double> values);

/// Index of the first maximum.
std::size_t peak_index(std::span<const double> values);

/// Width of the region at or above half the peak, with linear interpolation
/// at both crossings.
double full_width_half_max(std::span<const double> xs, std::span<const double> values);

/// CSV with header `unit_x,G_d,G_s`; one block per face point, blocks
/// separated by a blank line.
void write_weight_curves(std::ostream& out, std::span<const WeightCurve> curves);

}  // namespace facetell::scene
