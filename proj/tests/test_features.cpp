#include <doctest.h>

#include <cmath>
#include <sstream>

#include "facetell/error.hpp"
#include "facetell/features.hpp"
#include "facetell/rng.hpp"
#include "oracles.hpp"

using namespace facetell;
using namespace facetell::features;

namespace {

double max_rel_error(const Tensor3& got, const oracle::Volume& want) {
    double worst = 0.0;
    for (int c = 0; c < got.channels; ++c)
        for (int y = 0; y < got.height; ++y)
            for (int x = 0; x < got.width; ++x) {
                const double w = want[c][y][x];
                worst = std::max(worst, std::abs(got.at(c, y, x) - w) / std::max(1.0, std::abs(w)));
            }
    return worst;
}

FaceImage random_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    FaceImage img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.index(256));
    return img;
}

}  // namespace

TEST_CASE("upscale and resize") {
    const auto gray = upscale2x(FaceImage(3, 5, 77));
    CHECK(gray.width == 6);
    CHECK(gray.height == 10);
    for (auto v : gray.pixels) CHECK(v == 77);

    FaceImage ramp(2, 1);
    for (int c = 0; c < 3; ++c) ramp.at(0, 1, c) = 255;
    const auto up = upscale2x(ramp);
    REQUIRE(up.width == 4);
    REQUIRE(up.height == 2);
    for (int y = 0; y < 2; ++y) {
        for (int x = 1; x < 4; ++x) CHECK(up.at(y, x, 0) >= up.at(y, x - 1, 0));
        CHECK(up.at(y, 0, 0) == 0);
        CHECK(up.at(y, 1, 0) == 64);   // 0.25 * 255 rounded half-up
        CHECK(up.at(y, 2, 0) == 191);
        CHECK(up.at(y, 3, 0) == 255);
    }

    const auto img = random_image(9, 9, 3);
    CHECK(resize(img, 9) == img);
    for (auto v : resize(FaceImage(7, 4, 200), 16).pixels) CHECK(v == 200);

    FaceImage checker(2, 2);
    checker.at(0, 0, 0) = checker.at(1, 1, 0) = 255;
    const auto big = resize(checker, 8);
    CHECK(std::abs(int(big.at(0, 0, 0)) - 255) <= 1);
    CHECK(std::abs(int(big.at(7, 7, 0)) - 255) <= 1);
    CHECK(big.at(0, 7, 0) <= 1);
    CHECK(big.at(7, 0, 0) <= 1);
    CHECK_THROWS_AS(resize(img, 0), DomainError);
    CHECK_THROWS_AS(upscale2x(FaceImage{}), DomainError);
}

TEST_CASE("z-score normalization") {
    FaceImage img(3, 1);
    for (int x = 0; x < 3; ++x) img.at(0, x, 0) = static_cast<std::uint8_t>(x + 1);
    for (int x = 0; x < 3; ++x) img.at(0, x, 1) = 9;
    const auto t = znorm(img);
    CHECK(t.at(0, 0, 0) == doctest::Approx(-1.224744871391589));
    CHECK(t.at(0, 0, 1) == doctest::Approx(0.0));
    CHECK(t.at(0, 0, 2) == doctest::Approx(1.224744871391589));
    for (int x = 0; x < 3; ++x) CHECK(t.at(1, 0, x) == 0.0);

    const auto r = znorm(random_image(13, 11, 8));
    for (int c = 0; c < 3; ++c) {
        double s = 0.0, s2 = 0.0;
        for (int y = 0; y < r.height; ++y)
            for (int x = 0; x < r.width; ++x) s += r.at(c, y, x);
        const double mean = s / (r.height * r.width);
        for (int y = 0; y < r.height; ++y)
            for (int x = 0; x < r.width; ++x) s2 += (r.at(c, y, x) - mean) * (r.at(c, y, x) - mean);
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(std::sqrt(s2 / (r.height * r.width)) - 1.0) < 1e-9);
    }
}

TEST_CASE("residual block") {
    FeatureParams zero;
    for (auto& s : zero.res_scale) s = {1, 1, 1};
    CHECK(resblock_forward(Tensor3(3, 4, 5), zero) == Tensor3(3, 4, 5));

    const auto x = oracle::random_tensor(3, 6, 7, 17);
    const auto shortcut = resblock_forward(x, zero);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(shortcut.data[i] == std::max(0.0, x.data[i]));

    const auto params = random_feature_params(42);
    const auto input = oracle::random_tensor(3, 16, 12, 42);
    const auto out = resblock_forward(input, params);
    CHECK(out.channels == 3);
    CHECK(out.height == 16);
    CHECK(out.width == 12);
    CHECK(max_rel_error(out, oracle::resblock(oracle::to_volume(input), params)) < 1e-6);

    // Non-trivial affine exercised too.
    auto tweaked = params;
    tweaked.res_scale[1] = {0.5, 2.0, -1.0};
    tweaked.res_shift[2] = {0.1, -0.2, 0.3};
    CHECK(max_rel_error(resblock_forward(input, tweaked), oracle::resblock(oracle::to_volume(input), tweaked)) < 1e-6);

    CHECK_THROWS_AS(resblock_forward(Tensor3(2, 4, 4), params), DomainError);
}

TEST_CASE("attention block") {
    const auto params = random_feature_params(7);
    CHECK(cbam_forward(Tensor3(3, 5, 5), params) == Tensor3(3, 5, 5));

    auto p = params;
    Rng rng(7);
    for (auto& v : p.mlp_b1) v = rng.normal(0.0, 0.1);
    for (auto& v : p.mlp_b2) v = rng.normal(0.0, 0.1);
    p.spatial_bias = 0.05;
    const auto input = oracle::random_tensor(3, 11, 9, 7);
    CHECK(max_rel_error(cbam_forward(input, p), oracle::cbam(oracle::to_volume(input), p)) < 1e-6);

    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto c = oracle::random_tensor(3, 6, 6, 1000 + s);
        const auto out = cbam_forward(c, random_feature_params(s));
        for (std::size_t i = 0; i < c.data.size(); ++i) CHECK(std::abs(out.data[i]) <= std::abs(c.data[i]));
    }
    CHECK_THROWS_AS(cbam_forward(Tensor3(4, 4, 4), params), DomainError);
}

TEST_CASE("pooled features") {
    const auto flat = pooled_features(Tensor3(3, 8, 8, 2.5), 2);
    REQUIRE(flat.size() == feature_length(2));
    for (int c = 0; c < 3; ++c) {
        CHECK(flat[c * 6] == doctest::Approx(2.5));
        CHECK(flat[c * 6 + 1] == doctest::Approx(0.0));
        for (int k = 2; k < 6; ++k) CHECK(flat[c * 6 + k] == doctest::Approx(2.5));
    }
    CHECK(pooled_features(Tensor3(3, 4, 4), 1).size() == 9);

    const auto t = oracle::random_tensor(3, 13, 10, 5);
    const auto got = pooled_features(t, 4);
    const auto want = oracle::pooled(oracle::to_volume(t), 4);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    CHECK_THROWS_AS(pooled_features(t, 11), DomainError);
    CHECK_THROWS_AS(pooled_features(t, 0), DomainError);
}

TEST_CASE("feature extraction is deterministic") {
    const auto params = random_feature_params(9);
    CHECK(params == random_feature_params(9));
    CHECK_FALSE(params == random_feature_params(10));
    const auto img = random_image(32, 32, 1);
    const auto a = extract_features(img, params, {});
    CHECK(a.size() == feature_length(4));
    CHECK(a == extract_features(img, params, {}));
}

TEST_CASE("tensor files round-trip") {
    const auto t = oracle::random_tensor(3, 4, 5, 77);
    std::stringstream buf;
    write_tensor(buf, t);
    CHECK(buf.str().substr(0, 4) == "FTT1");
    CHECK(read_tensor(buf) == t);
    std::stringstream bad("XXXX");
    CHECK_THROWS_AS(read_tensor(bad), IoError);
}
