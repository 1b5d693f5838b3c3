#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "facetell/error.hpp"
#include "facetell/optics.hpp"
#include "facetell/rng.hpp"

using namespace facetell;
using namespace facetell::optics;
using std::numbers::pi;

namespace {

void check_vec(const Vec3& a, const Vec3& b, double tol = 1e-12) {
    CHECK(std::abs(a.x - b.x) <= tol);
    CHECK(std::abs(a.y - b.y) <= tol);
    CHECK(std::abs(a.z - b.z) <= tol);
}

double rel_diff(const Rgb& a, const Rgb& b) {
    double worst = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double scale = std::max({std::abs(a[c]), std::abs(b[c]), 1e-300});
        worst = std::max(worst, std::abs(a[c] - b[c]) / scale);
    }
    return worst;
}

Vec3 random_unit(Rng& rng) {
    while (true) {
        Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        if (norm(v) > 1e-3) return normalized(v);
    }
}

}  // namespace

TEST_CASE("angular distribution") {
    CHECK(angular_distribution(0.0, 30.0) == 1.0);
    CHECK(angular_distribution(pi / 2, 30.0) == doctest::Approx(0.0));
    CHECK(angular_distribution(pi / 3, 30.0) == doctest::Approx(9.31322574615e-10).epsilon(1e-9));
    CHECK_THROWS_AS(angular_distribution(-0.1, 30.0), DomainError);
    CHECK_THROWS_AS(angular_distribution(pi / 2 + 0.1, 30.0), DomainError);

    double prev = 2.0;
    for (int i = 0; i <= 100; ++i) {
        const double w = angular_distribution(i * (pi / 2) / 100.0, 30.0);
        CHECK(w <= prev);
        prev = w;
    }
}

TEST_CASE("incident intensity") {
    const Rgb on_axis = incident_intensity({100.0, 100.0, 100.0}, 0.0, 2.0, 30.0);
    CHECK(on_axis[0] == doctest::Approx(25.0));
    const Rgb dark = incident_intensity({0.0, 0.0, 0.0}, 0.3, 1.0, 30.0);
    CHECK(dark[0] == 0.0);
    const Rgb oblique = incident_intensity({100.0, 0.0, 0.0}, pi / 3, 1.0, 30.0);
    CHECK(oblique[0] == doctest::Approx(9.31322574615e-8).epsilon(1e-9));
    CHECK_THROWS_AS(incident_intensity({1.0, 1.0, 1.0}, 0.0, 0.0, 30.0), DomainError);
    CHECK_THROWS_AS(incident_intensity({1.0, 1.0, 1.0}, 0.0, -1.0, 30.0), DomainError);
}

TEST_CASE("mirror direction") {
    check_vec(mirror_direction({0, 0, -1}, {0, 0, 1}), {0, 0, 1});
    check_vec(mirror_direction({1, 0, 0}, {0, 0, 1}), {1, 0, 0});
    const double h = std::sqrt(2.0) / 2.0;
    check_vec(mirror_direction({h, 0, -h}, {0, 0, 1}), {h, 0, h});
    CHECK_THROWS_AS(mirror_direction({2, 0, 0}, {0, 0, 1}), DomainError);
    CHECK_THROWS_AS(mirror_direction({1, 0, 0}, {0, 0, 1.1}), DomainError);

    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const Vec3 d = random_unit(rng);
        const Vec3 n = random_unit(rng);
        const Vec3 m = mirror_direction(d, n);
        CHECK(std::abs(norm(m) - 1.0) < 1e-12);
        CHECK(std::abs(dot(m, n) + dot(d, n)) < 1e-12);  // equal angle with the normal
        check_vec(mirror_direction(m, n), d);
    }
}

TEST_CASE("importance weights") {
    CHECK(diffuse_weight(0.0, 0.0, 30.0) == 1.0);
    CHECK(diffuse_weight(pi / 2, 0.0, 30.0) == doctest::Approx(0.0));
    // cos^32(pi/4) * cos(pi/3) = 2^-16 * 0.5
    CHECK(diffuse_weight(pi / 4, pi / 3, 30.0) == doctest::Approx(std::ldexp(1.0, -17)).epsilon(1e-12));
    CHECK(specular_weight(0.0, 0.0, 30.0, 2.0) == 1.0);
    CHECK(specular_weight(0.0, pi / 2, 30.0, 2.0) == doctest::Approx(0.0));
    CHECK(specular_weight(pi / 4, pi / 4, 30.0, 2.0) == doctest::Approx(std::ldexp(1.0, -17)).epsilon(1e-12));
    // back-facing mirror direction contributes nothing
    CHECK(specular_weight(0.0, 2.0, 30.0, 2.0) == 0.0);
    CHECK_THROWS_AS(diffuse_weight(0.0, pi / 2 + 0.01, 30.0), DomainError);
    CHECK_THROWS_AS(specular_weight(0.0, pi + 0.01, 30.0, 2.0), DomainError);

    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const double te = rng.uniform(0.0, pi / 2), tr = rng.uniform(0.0, pi / 2), tm = rng.uniform(0.0, pi);
        CHECK(diffuse_weight(te, tr, 30.0) <= 1.0);
        CHECK(specular_weight(te, tm, 30.0, 2.0) <= 1.0);
        CHECK(diffuse_weight(te, tr, 30.0) >= 0.0);
    }
}

TEST_CASE("reflected intensity examples") {
    const FacePoint p{{0, 0, 1}, {0, 0, -1}, 0.5, 0.5, 0.0, 2.0};
    const std::vector<EmitterUnit> one{{{0, 0, 0}, {100, 0, 0}}};
    const Vec3 screen_n{0, 0, 1};
    // Camera behind the emitter along the axis sees the exact mirror direction.
    const Rgb r = reflected_intensity(p, one, screen_n, {0, 0, -1}, {30.0, {0, 0, 0}});
    CHECK(r[0] == doctest::Approx(100.0));
    CHECK(r[1] == 0.0);
    CHECK(r[2] == 0.0);

    const FacePoint q{{0, 0, 1}, {0, 0, -1}, 0.6, 0.3, 0.5, 2.0};
    const std::vector<EmitterUnit> dark{{{0, 0, 0}, {0, 0, 0}}, {{0.1, 0, 0}, {0, 0, 0}}};
    const Rgb amb = reflected_intensity(q, dark, screen_n, {0, 0.1, 0}, {30.0, {10, 10, 10}});
    for (double v : amb) CHECK(v == doctest::Approx(5.0));
    const Rgb amb_only = reflected_intensity(q, {}, screen_n, {0, 0.1, 0}, {30.0, {10, 10, 10}});
    CHECK(amb_only[0] == doctest::Approx(5.0));

    CHECK_THROWS_AS(reflected_intensity(q, {}, screen_n, {0, 0.1, 0}, {30.0, {0, 0, 0}}), DomainError);
    CHECK_THROWS_AS(reflected_intensity(q, one, screen_n, q.position, {30.0, {0, 0, 0}}), DomainError);
    const FacePoint on_plane{{0.2, 0, 0}, {0, 0, -1}};
    CHECK_THROWS_AS(reflected_intensity_planar(on_plane, one, screen_n, {0, 0.1, 0}, {30.0, {0, 0, 0}}), DomainError);
}

TEST_CASE("linearity and inverse square") {
    Rng rng(21);
    const Vec3 screen_n{0, 0, 1};
    const OpticsConfig cfg{30.0, {0, 0, 0}};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<EmitterUnit> units;
        for (int i = 0; i < 6; ++i) {
            units.push_back({{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0.0},
                             {rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100)}});
        }
        const FacePoint p{{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.3, 0.6)},
                          normalized(Vec3{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), -1.0})};
        const Vec3 cam{0, 0.1, 0};
        auto doubled = units;
        for (auto& u : doubled) u.radiance = u.radiance * 2.0;
        const Rgb a = reflected_intensity(p, units, screen_n, cam, cfg);
        const Rgb b = reflected_intensity(p, doubled, screen_n, cam, cfg);
        for (int c = 0; c < 3; ++c) CHECK(b[c] == doctest::Approx(2.0 * a[c]).epsilon(1e-14));
    }

    // Same angles at twice the distance: scale every position by 2 about the emitter.
    const std::vector<EmitterUnit> e{{{0, 0, 0}, {50, 50, 50}}};
    const FacePoint near{{0.05, 0.02, 0.4}, normalized(Vec3{0.1, 0.0, -1.0})};
    const FacePoint far{{0.10, 0.04, 0.8}, near.normal};
    const Rgb rn = reflected_intensity(near, e, screen_n, {0, 0.1, 0}, cfg);
    const Rgb rf = reflected_intensity(far, e, screen_n, {0, 0.2, 0}, cfg);
    for (int c = 0; c < 3; ++c) CHECK(rf[c] == doctest::Approx(rn[c] / 4.0).epsilon(1e-12));
}

TEST_CASE("per-pair and planar forms agree") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<EmitterUnit> units;
        for (int i = 0; i < 20; ++i) {
            units.push_back({{rng.uniform(-0.17, 0.17), rng.uniform(-0.1, 0.1), 0.0},
                             {rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100)}});
        }
        const FacePoint p{{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(0.2, 0.7)},
                          normalized(Vec3{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), -1.0}),
                          rng.uniform(0.1, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), 2.0};
        const OpticsConfig cfg{30.0, {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)}};
        const Vec3 cam{rng.uniform(-0.05, 0.05), rng.uniform(0.05, 0.15), 0.0};
        CHECK(rel_diff(reflected_intensity(p, units, {0, 0, 1}, cam, cfg),
                       reflected_intensity_planar(p, units, {0, 0, 1}, cam, cfg)) < 1e-9);
    }
}

TEST_CASE("validation") {
    CHECK_THROWS_AS(validate(OpticsConfig{-1.0, {0, 0, 0}}), DomainError);
    CHECK_THROWS_AS(validate(OpticsConfig{30.0, {-1, 0, 0}}), DomainError);
    CHECK_THROWS_AS(validate(EmitterUnit{{0, 0, 0}, {-1, 0, 0}}), DomainError);
    CHECK_NOTHROW(validate(FacePoint{{0, 0, 1}, {0, 0, -1}}));
}
