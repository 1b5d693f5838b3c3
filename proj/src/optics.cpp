#include "facetell/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "facetell/error.hpp"

namespace facetell::optics {
namespace {

constexpr double kAngleSlack = 1e-12;
constexpr double kUnitTolerance = 1e-6;
constexpr double kPlaneTolerance = 1e-12;

void check_angle(double theta, double hi, const char* name) {
    if (!(theta >= -kAngleSlack && theta <= hi + kAngleSlack)) {
        throw DomainError(std::string(name) + " = " + std::to_string(theta) + " outside [0, " +
                          std::to_string(hi) + "]");
    }
}

void check_unit(const Vec3& v, const char* name) {
    if (std::abs(norm(v) - 1.0) > kUnitTolerance) {
        throw DomainError(std::string(name) + " is not a unit vector");
    }
}

double clamp_cos(double c) { return std::clamp(c, 0.0, 1.0); }

bool non_negative(const Rgb& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
}

bool any_positive(const Rgb& v) {
    return std::any_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
}

void check_scene_point(const FacePoint& point, std::span<const EmitterUnit> emitters,
                       const Vec3& screen_normal, const Vec3& camera, const OpticsConfig& cfg) {
    validate(point);
    validate(cfg);
    check_unit(screen_normal, "screen normal");
    if (norm(camera - point.position) == 0.0) {
        throw DomainError("camera coincides with the face point");
    }
    if (emitters.empty() && !any_positive(cfg.ambient)) {
        throw DomainError("no emitters and no ambient light");
    }
    if (!emitters.empty()) {
        const double d0 = dot(point.position - emitters.front().position, screen_normal);
        if (std::abs(d0) <= kPlaneTolerance) {
            throw DomainError("face point lies on the screen plane");
        }
    }
}

}  // namespace

void validate(const EmitterUnit& unit) {
    if (!non_negative(unit.radiance)) throw DomainError("emitter radiance must be >= 0");
}

void validate(const FacePoint& point) {
    check_unit(point.normal, "face normal");
    for (double k : {point.k_d, point.k_s, point.k_a}) {
        if (!(k >= 0.0 && k <= 1.0)) throw DomainError("reflection coefficients must lie in [0, 1]");
    }
    if (!(point.n_s >= 1.0)) throw DomainError("shininess exponent must be >= 1");
}

void validate(const OpticsConfig& cfg) {
    if (!(cfg.g >= 0.0)) throw DomainError("angular exponent g must be >= 0");
    if (!non_negative(cfg.ambient)) throw DomainError("ambient intensity must be >= 0");
}

double angular_distribution_cos(double cos_theta, double g) { return std::pow(clamp_cos(cos_theta), g); }

double angular_distribution(double theta, double g) {
    check_angle(theta, std::numbers::pi / 2, "theta");
    return angular_distribution_cos(std::cos(theta), g);
}

Rgb incident_intensity(const Rgb& emitted, double theta_e, double distance, double g) {
    if (!(distance > 0.0)) throw DomainError("emitter-to-point distance must be > 0");
    return emitted * (angular_distribution(theta_e, g) / (distance * distance));
}

Vec3 mirror_direction(const Vec3& incident, const Vec3& normal) {
    check_unit(incident, "incident direction");
    check_unit(normal, "normal");
    return incident - 2.0 * dot(incident, normal) * normal;
}

double diffuse_weight_cos(double cos_e, double cos_r, double g) {
    cos_e = clamp_cos(cos_e);
    return angular_distribution_cos(cos_e, g) * cos_e * cos_e * clamp_cos(cos_r);
}

double diffuse_weight(double theta_e, double theta_r, double g) {
    check_angle(theta_e, std::numbers::pi / 2, "theta_e");
    check_angle(theta_r, std::numbers::pi / 2, "theta_r");
    return diffuse_weight_cos(std::cos(theta_e), std::cos(theta_r), g);
}

double specular_weight_cos(double cos_e, double cos_m, double g, double n_s) {
    cos_e = clamp_cos(cos_e);
    return angular_distribution_cos(cos_e, g) * cos_e * cos_e * std::pow(clamp_cos(cos_m), n_s);
}

double specular_weight(double theta_e, double theta_m, double g, double n_s) {
    check_angle(theta_e, std::numbers::pi / 2, "theta_e");
    check_angle(theta_m, std::numbers::pi, "theta_m");
    return specular_weight_cos(std::cos(theta_e), std::cos(theta_m), g, n_s);
}

PairAngles pair_angles(const Vec3& emitter_pos, const Vec3& screen_normal, const FacePoint& point,
                       const Vec3& camera) {
    const Vec3 path = point.position - emitter_pos;
    const double distance = norm(path);
    if (!(distance > 0.0)) throw DomainError("emitter coincides with the face point");
    const Vec3 emit_dir = path * (1.0 / distance);
    const Vec3 view_dir = normalized(camera - point.position);

    PairAngles a;
    a.distance = distance;
    a.cos_e = clamp_cos(dot(emit_dir, screen_normal));
    a.cos_r = clamp_cos(-dot(emit_dir, point.normal));
    // Light arriving from behind the surface has no mirror lobe either.
    if (a.cos_r > 0.0) {
        const Vec3 mirror = emit_dir - 2.0 * dot(emit_dir, point.normal) * point.normal;
        a.cos_m = clamp_cos(dot(mirror, view_dir));
    }
    return a;
}

Rgb reflected_intensity(const FacePoint& point, std::span<const EmitterUnit> emitters,
                        const Vec3& screen_normal, const Vec3& camera, const OpticsConfig& cfg) {
    check_scene_point(point, emitters, screen_normal, camera, cfg);
    Rgb diffuse{0.0, 0.0, 0.0};
    Rgb specular{0.0, 0.0, 0.0};
    for (const auto& e : emitters) {
        const PairAngles a = pair_angles(e.position, screen_normal, point, camera);
        const double reach = angular_distribution_cos(a.cos_e, cfg.g) / (a.distance * a.distance);
        const double d = reach * a.cos_r;
        const double s = reach * std::pow(a.cos_m, point.n_s);
        for (int c = 0; c < 3; ++c) {
            diffuse[c] += e.radiance[c] * d;
            specular[c] += e.radiance[c] * s;
        }
    }
    return diffuse * point.k_d + specular * point.k_s + cfg.ambient * point.k_a;
}

Rgb reflected_intensity_planar(const FacePoint& point, std::span<const EmitterUnit> emitters,
                               const Vec3& screen_normal, const Vec3& camera,
                               const OpticsConfig& cfg) {
    check_scene_point(point, emitters, screen_normal, camera, cfg);
    Rgb sum{0.0, 0.0, 0.0};
    double d0 = 1.0;
    if (!emitters.empty()) d0 = dot(point.position - emitters.front().position, screen_normal);
    for (const auto& e : emitters) {
        const PairAngles a = pair_angles(e.position, screen_normal, point, camera);
        const double w = point.k_d * diffuse_weight_cos(a.cos_e, a.cos_r, cfg.g) +
                         point.k_s * specular_weight_cos(a.cos_e, a.cos_m, cfg.g, point.n_s);
        for (int c = 0; c < 3; ++c) sum[c] += e.radiance[c] * w;
    }
    return sum * (1.0 / (d0 * d0)) + cfg.ambient * point.k_a;
}

}  // namespace facetell::optics
