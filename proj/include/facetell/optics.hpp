#pragma once

#include <span>

#include "facetell/vec3.hpp"

/// Reflection physics of a screen-lit face: a screen made of directional
/// point emitters, a Phong-reflecting face surface and a camera.
///
/// Angle-taking functions accept radians and check their domain; the
/// `*_cos` variants work directly on clamped cosines and are what the
/// renderers use internally.
namespace facetell::optics {

inline constexpr double kDefaultAngularExponent = 30.0;
inline constexpr double kDefaultShininess = 2.0;

struct EmitterUnit {
    Vec3 position;
    Rgb radiance{0.0, 0.0, 0.0};
};

struct FacePoint {
    Vec3 position;
    Vec3 normal{0.0, 0.0, 1.0};
    double k_d = 0.6;
    double k_s = 0.3;
    double k_a = 0.5;
    double n_s = kDefaultShininess;
};

struct OpticsConfig {
    double g = kDefaultAngularExponent;
    Rgb ambient{0.0, 0.0, 0.0};
};

// Throws DomainError when an invariant of the type does not hold.
void validate(const EmitterUnit& unit);
void validate(const FacePoint& point);
void validate(const OpticsConfig& cfg);

/// W(theta) = cos^g(theta) for theta in [0, pi/2].
double angular_distribution(double theta, double g);
double angular_distribution_cos(double cos_theta, double g);

/// Intensity arriving at a face point from one emitter: I_e * W(theta_e) / d^2.
Rgb incident_intensity(const Rgb& emitted, double theta_e, double distance, double g);

/// Reflection of `incident` about `normal`; both must be unit vectors.
Vec3 mirror_direction(const Vec3& incident, const Vec3& normal);

/// Importance weight of one screen unit for diffuse reflection,
/// W(theta_e) cos^2(theta_e) cos(theta_r).
double diffuse_weight(double theta_e, double theta_r, double g);
double diffuse_weight_cos(double cos_e, double cos_r, double g);

/// Importance weight for specular reflection, W(theta_e) cos^2(theta_e)
/// cos^n_s(theta_m) with back-facing mirror directions contributing 0.
double specular_weight(double theta_e, double theta_m, double g, double n_s);
double specular_weight_cos(double cos_e, double cos_m, double g, double n_s);

/// Cosines of the three angles that govern one emitter/face-point pair.
struct PairAngles {
    double cos_e = 0.0;  // emitting direction vs. screen normal
    double cos_r = 0.0;  // receiving direction vs. face normal
    double cos_m = 0.0;  // mirror direction vs. viewing direction
    double distance = 0.0;
};

/// Clamped cosines for emitter at `emitter_pos` lighting `point`, seen from
/// `camera`. Requires a non-zero emitter-to-point distance.
PairAngles pair_angles(const Vec3& emitter_pos, const Vec3& screen_normal, const FacePoint& point,
                       const Vec3& camera);

/// Phong radiance leaving `point` toward `camera`, summed over emitters using
/// per-pair Euclidean distances (inverse-square per emitter).
Rgb reflected_intensity(const FacePoint& point, std::span<const EmitterUnit> emitters,
                        const Vec3& screen_normal, const Vec3& camera, const OpticsConfig& cfg);

/// Same radiance for a planar screen, factored through the perpendicular
/// distance d0 from the point to the screen plane and the diffuse/specular
/// importance weights. Emitters must be coplanar with normal `screen_normal`.
Rgb reflected_intensity_planar(const FacePoint& point, std::span<const EmitterUnit> emitters,
                               const Vec3& screen_normal, const Vec3& camera,
                               const OpticsConfig& cfg);

}  // namespace facetell::optics
