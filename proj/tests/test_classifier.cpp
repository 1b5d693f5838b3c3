#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "facetell/classifier.hpp"
#include "facetell/error.hpp"
#include "facetell/rng.hpp"
#include "oracles.hpp"

using namespace facetell;
using namespace facetell::classifier;

namespace {

LabelLayout table_layout() { return LabelLayout({6, 6, 6, 8, 2, 1}); }

// Gaussian blobs, one centre per unified label.
std::vector<LabeledFeatures> blobs(const LabelLayout& layout, int per_label, int dims, double spread, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> centres(layout.total(), std::vector<double>(dims));
    for (auto& c : centres)
        for (auto& v : c) v = rng.normal(0.0, 3.0);
    std::vector<LabeledFeatures> out;
    for (int l = 0; l < layout.total(); ++l)
        for (int i = 0; i < per_label; ++i) {
            std::vector<double> f(dims);
            for (int d = 0; d < dims; ++d) f[d] = centres[l][d] + rng.normal(0.0, spread);
            out.push_back({f, UnifiedLabel{l}});
        }
    return out;
}

}  // namespace

TEST_CASE("label unification") {
    const LabelLayout small({2, 3});
    CHECK(unify_label(0, 0, small).index == 0);
    CHECK(unify_label(1, 0, small).index == 2);
    CHECK_THROWS_AS(unify_label(2, 0, small), DomainError);
    CHECK_THROWS_AS(unify_label(0, 2, small), DomainError);

    const auto layout = table_layout();
    CHECK(layout.total() == 29);
    int expected = 0;
    for (int j = 0; j < layout.categories(); ++j)
        for (int k = 0; k < layout.apps_in(j); ++k) {
            const auto u = unify_label(j, k, layout);
            CHECK(u.index == expected++);
            CHECK(split_label(u, layout) == CategoryApp{j, k});
        }
    CHECK_THROWS_AS(split_label(UnifiedLabel::unknown(), layout), DomainError);
    CHECK_THROWS_AS(LabelLayout({2, 0}), DomainError);
    CHECK(layout.app_name(3, 0).size() > 0);
}

TEST_CASE("softmax and cross-entropy") {
    const auto half = softmax(std::vector<double>{0, 0});
    CHECK(half[0] == doctest::Approx(0.5));
    const auto third = softmax(std::vector<double>{4, 4, 4});
    for (double p : third) CHECK(p == doctest::Approx(1.0 / 3.0));
    const auto s = softmax(std::vector<double>{1, 2, 3});
    CHECK(s[0] == doctest::Approx(0.0900305731704).epsilon(1e-10));
    CHECK(s[1] == doctest::Approx(0.244728471055).epsilon(1e-10));
    CHECK(s[2] == doctest::Approx(0.665240955775).epsilon(1e-10));

    const auto shifted = softmax(std::vector<double>{1001, 1002, 1003});
    for (int i = 0; i < 3; ++i) CHECK(std::abs(shifted[i] - s[i]) < 1e-12);
    double sum = 0.0;
    for (double p : softmax(std::vector<double>{-3, 0.5, 7, 2})) sum += p;
    CHECK(std::abs(sum - 1.0) < 1e-12);

    CHECK(cross_entropy(std::vector<double>{1, 0}, std::vector<double>{1, 0}) == doctest::Approx(0.0));
    CHECK(cross_entropy(std::vector<double>{0, 1}, std::vector<double>{1, 0}) == doctest::Approx(-std::log(1e-12)));
    CHECK(cross_entropy(std::vector<double>{0.5, 0.5}, 1) == doctest::Approx(std::log(2.0)));
    CHECK(cross_entropy(std::vector<double>{0.1, 0.9}, 0) == doctest::Approx(2.302585093).epsilon(1e-9));
    CHECK_THROWS_AS(cross_entropy(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 1}), DomainError);

    CHECK(argmax(std::vector<double>{1, 3, 3, 2}) == 1);
    CHECK(argmax(std::vector<double>{5, 5}) == 0);
}

TEST_CASE("adam") {
    std::vector<double> p{1.0};
    AdamState st(1);
    const AdamConfig cfg{0.1};
    adam_step(p, std::vector<double>{0.0}, st, cfg);
    CHECK(p[0] == 1.0);

    p = {1.0};
    st = AdamState(1);
    adam_step(p, std::vector<double>{1.0}, st, cfg);
    CHECK(std::abs(p[0] - 0.90000000099999999) < 1e-12);
    adam_step(p, std::vector<double>{0.5}, st, cfg);
    CHECK(std::abs(p[0] - 0.80678203829816040791) < 1e-12);
    CHECK(st.t == 2);
    CHECK(std::abs(st.m[0] - 0.14) < 1e-15);
    CHECK(std::abs(st.v[0] - 0.001249) < 1e-15);
    CHECK_THROWS_AS(adam_step(p, std::vector<double>{1.0, 2.0}, st, cfg), DomainError);
}

TEST_CASE("head gradients match finite differences") {
    Rng rng(31);
    for (int trial = 0; trial < 3; ++trial) {
        const int in = 4, out = 3;
        const auto head = MlpHead::initialized(in, out, 500 + trial);
        std::vector<double> x(in);
        for (auto& v : x) v = rng.normal();
        const std::size_t target = rng.index(out);
        std::vector<double> grads(head.params().size(), 0.0);
        const double loss = head.accumulate_gradient(x, target, grads);
        CHECK(loss == doctest::Approx(oracle::head_loss(head, x, target)));
        const auto probe = oracle::gradient_probe(head, 20, 70 + trial);
        const auto numeric = oracle::numeric_gradient(head, x, target, probe, 1e-5);
        for (std::size_t k = 0; k < probe.size(); ++k) CHECK(oracle::gradient_error(grads[probe[k]], numeric[k]) < 1e-4);
    }
}

TEST_CASE("training") {
    const LabelLayout layout({2, 1});
    const auto data = blobs(layout, 40, 6, 0.3, 8);
    const features::FeatureParams fp = features::random_feature_params(1);
    TrainConfig cfg{40, 16, 1e-3, 5};
    const auto result = train_two_tier(data, layout, fp, {}, cfg);
    std::vector<UnifiedLabel> pred, truth;
    for (const auto& s : data) {
        pred.push_back(predict_features(result.model, s.features).label);
        truth.push_back(s.label);
    }
    CHECK(accuracy(pred, truth) == 1.0);

    const auto again = train_two_tier(data, layout, fp, {}, cfg);
    CHECK(again.model == result.model);

    cfg.epochs = 0;
    const auto untouched = train_two_tier(data, layout, fp, {}, cfg);
    CHECK(untouched.losses.empty());
    const auto init = initial_model(layout, fp, {}, 6, cfg.seed);
    CHECK(untouched.model.discriminator == init.discriminator);
    CHECK(untouched.model.predictors == init.predictors);

    std::vector<LabeledFeatures> missing;
    for (const auto& s : data)
        if (s.label.index < 2) missing.push_back(s);
    cfg.epochs = 1;
    try {
        train_two_tier(missing, layout, fp, {}, cfg);
        FAIL("expected an error");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("category1") != std::string::npos);
    }
}

TEST_CASE("mean epoch loss decreases") {
    const auto layout = table_layout();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto data = blobs(layout, 12, 10, 1.0, seed);
        const auto result = train_two_tier(data, layout, features::random_feature_params(seed), {},
                                           TrainConfig{5, 16, 1e-4, seed});
        double first = 0.0, last = 0.0;
        int nf = 0, nl = 0;
        for (const auto& r : result.losses) {
            if (r.head != 0) continue;
            if (r.epoch == 0) first += r.loss, ++nf;
            if (r.epoch == 4) last += r.loss, ++nl;
        }
        CHECK(last / nl <= first / nf);
    }
}

TEST_CASE("routing") {
    const LabelLayout layout({2, 3});
    const auto data = blobs(layout, 10, 5, 0.5, 2);
    auto model = train_two_tier(data, layout, features::random_feature_params(3), {}, TrainConfig{2, 8, 1e-3, 1}).model;

    const auto before = predict_features(model, data[7].features).label;
    auto scaled = model;
    auto w = scaled.discriminator.weights(2);
    for (auto& v : w) v *= 3.5;
    for (auto& v : scaled.discriminator.bias(2)) v *= 3.5;
    for (const auto& s : data) CHECK(predict_features(scaled, s.features).label == predict_features(model, s.features).label);

    // Force category 0 everywhere.
    for (auto& v : model.discriminator.weights(2)) v = 0.0;
    auto b = model.discriminator.bias(2);
    b[0] = 10.0;
    b[1] = 0.0;
    for (const auto& s : data) CHECK(predict_features(model, s.features).label.index < 2);
    (void)before;
}

TEST_CASE("accuracy") {
    const std::vector<UnifiedLabel> a{{1}, {2}, {3}, {4}};
    const std::vector<UnifiedLabel> b{{1}, {2}, {3}, {0}};
    const std::vector<UnifiedLabel> c{{5}, {5}, {5}, {5}};
    CHECK(accuracy(a, a) == 1.0);
    CHECK(accuracy(a, c) == 0.0);
    CHECK(accuracy(a, b) == 0.75);
    const std::vector<UnifiedLabel> u{UnifiedLabel::unknown(), {1}};
    const std::vector<UnifiedLabel> v{UnifiedLabel::unknown(), {2}};
    CHECK(accuracy(u, v) == 0.5);
    CHECK_THROWS_AS(accuracy(a, u), DomainError);
}

TEST_CASE("model serialization") {
    const LabelLayout layout({2, 1}, {"x", "y"}, {{"x1", "x2"}, {"y1"}});
    const auto data = blobs(layout, 6, 54, 0.5, 4);
    const auto model =
        train_two_tier(data, layout, features::random_feature_params(4), {}, TrainConfig{1, 4, 1e-3, 2}).model;
    const auto text = model_to_text(model);
    const auto back = model_from_text(text);
    CHECK(back == model);
    CHECK(model_to_text(back) == text);

    FaceImage img(20, 20, 90);
    img.at(3, 4, 2) = 250;
    const auto p1 = predict(model, img);
    const auto p2 = predict(back, img);
    CHECK(p1.label == p2.label);
    CHECK(p1.category_probs == p2.category_probs);
    CHECK(p1.app_probs == p2.app_probs);

    const auto path = std::filesystem::temp_directory_path() / "facetell_model_test.json";
    save_model(path, model);
    CHECK(load_model(path) == model);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(model_from_text("{}"), IoError);
    CHECK_THROWS_AS(model_from_text("not json"), IoError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), IoError);
}
