#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "s2s/error.hpp"
#include "s2s/trainer.hpp"

#include <Eigen/QR>

#include <cstdio>
#include <numbers>
#include <random>

using namespace s2s;

namespace {

std::mt19937_64 g_rng(555);

ShapeSpace synthetic_space(int n_vertices, int k, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int dim = 3 * n_vertices;
    ShapeSpace space;
    space.mean.resize(dim);
    for (auto& v : space.mean.reshaped()) v = gauss(rng);
    Eigen::MatrixXd raw(dim, k);
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = gauss(rng);
    space.components =
        Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ() * Eigen::MatrixXd::Identity(dim, k);
    space.variances = Eigen::VectorXd::LinSpaced(k, 2.0, 1.0);
    space.variance_captured = 1.0;
    for (std::int32_t i = 1; i + 1 < n_vertices; ++i) space.template_triangles.push_back({0, i, i + 1});
    return space;
}

std::vector<ShapeCoeffs> random_coeffs(int count, int k) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<ShapeCoeffs> out;
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd v(k);
        for (auto& x : v.reshaped()) x = gauss(g_rng);
        out.push_back(ShapeCoeffs{v});
    }
    return out;
}

ContourSamples synthetic_contour(int M, unsigned seed) {
    // a noisy star-shaped closed curve, normalized like the real sampler
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-0.02, 0.02);
    ContourSamples samples;
    samples.M = M;
    std::vector<Eigen::Vector2d> interior(static_cast<std::size_t>(M));
    for (int j = 0; j < M; ++j) {
        const double theta = 0.5 * std::numbers::pi + 2.0 * std::numbers::pi * j / M;
        const double radius = 0.4 + u(rng);
        interior[static_cast<std::size_t>(j)] = Eigen::Vector2d(radius * std::cos(theta), radius * std::sin(theta));
    }
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : interior) centroid += p;
    centroid /= M;
    for (auto& p : interior) p -= centroid;
    samples.points.push_back(interior.back());
    samples.points.insert(samples.points.end(), interior.begin(), interior.end());
    samples.points.push_back(interior.front());
    return samples;
}

TrainingSet synthetic_training_set(int count, int M, int k, unsigned seed) {
    TrainingSet set;
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.5);
    for (int i = 0; i < count; ++i) {
        TrainingSample sample;
        sample.front = synthetic_contour(M, seed + 2 * static_cast<unsigned>(i));
        sample.side = synthetic_contour(M, seed + 2 * static_cast<unsigned>(i) + 1);
        sample.coeffs.resize(k);
        for (auto& v : sample.coeffs.reshaped()) v = gauss(rng);
        set.push_back(std::move(sample));
    }
    return set;
}

ModelConfig tiny_config(int M = 27, int k = 2) {
    ModelConfig config;
    config.M = M;
    config.k = k;
    config.channels = {2, 3, 4, 4};
    config.fc_hidden = {8};
    return config;
}

std::vector<std::vector<float>> snapshot_params(Model<float>& model) {
    std::vector<std::vector<float>> out;
    model.visit_params([&](ParamGroup, std::vector<float>& w, std::vector<float>&) { out.push_back(w); });
    return out;
}

} // namespace

TEST_CASE("coefficient loss on trivial batches") {
    SUBCASE("equal batches give zero") {
        const auto batch = random_coeffs(4, 3);
        CHECK(coeff_loss(batch, batch) == 0.0);
    }
    SUBCASE("a (3,4) difference gives 25") {
        std::vector<ShapeCoeffs> pred{ShapeCoeffs{Eigen::Vector2d(3.0, 4.0)}};
        std::vector<ShapeCoeffs> truth{ShapeCoeffs{Eigen::Vector2d(0.0, 0.0)}};
        CHECK(coeff_loss(pred, truth) == doctest::Approx(25.0));
    }
    SUBCASE("shape mismatch is invalid") {
        std::vector<ShapeCoeffs> pred{ShapeCoeffs{Eigen::Vector2d(1.0, 2.0)}};
        std::vector<ShapeCoeffs> truth{ShapeCoeffs{Eigen::Vector3d(1.0, 2.0, 3.0)}};
        CHECK_THROWS_AS(coeff_loss(pred, truth), InvalidInput);
        CHECK_THROWS_AS(coeff_loss(pred, std::vector<ShapeCoeffs>{}), InvalidInput);
    }
}

TEST_CASE("vertex loss equals coefficient loss on an orthonormal space") {
    const ShapeSpace space = synthetic_space(20, 5, 77);
    REQUIRE(space.orthonormality_error() <= 1e-8);

    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto pred = random_coeffs(3, 5);
        const auto truth = random_coeffs(3, 5);
        const double vl = vertex_loss(space, pred, truth);
        const double cl = coeff_loss(pred, truth);
        worst = std::max(worst, std::abs(vl - cl) / std::max(vl, 1e-12));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("the loss identity detects a non-orthonormal basis") {
    ShapeSpace skewed = synthetic_space(20, 5, 78);
    skewed.components.col(0) *= 1.1;  // break Omega^T Omega = I
    CHECK(skewed.orthonormality_error() > 1e-8);

    const auto pred = random_coeffs(5, 5);
    const auto truth = random_coeffs(5, 5);
    const double vl = vertex_loss(skewed, pred, truth);
    const double cl = coeff_loss(pred, truth);
    CHECK(std::abs(vl - cl) / std::max(vl, 1e-12) > 1e-6);
}

TEST_CASE("coeff_loss gradient matches finite differences") {
    VectorBatch<double> pred{{0.3, -0.7}, {1.1, 0.4}};
    const VectorBatch<double> truth{{0.0, 0.2}, {-0.3, 0.9}};
    const auto grad = coeff_loss_grad(pred, truth);
    const double h = 1e-6;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        for (std::size_t i = 0; i < pred[s].size(); ++i) {
            auto plus = pred, minus = pred;
            plus[s][i] += h;
            minus[s][i] -= h;
            const double fd = (coeff_loss(plus, truth) - coeff_loss(minus, truth)) / (2.0 * h);
            CHECK(grad[s][i] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("adam follows the hand-computed recurrence for a constant gradient") {
    TrainConfig config;
    config.learning_rate = 0.1;
    std::vector<double> p{1.0};
    std::vector<double> m{0.0}, v{0.0};
    const std::vector<double> g{0.5};

    double em = 0.0, ev = 0.0, expect = 1.0;
    for (long step = 1; step <= 3; ++step) {
        adam_update_array(p, g, m, v, step, config);
        em = 0.9 * em + 0.1 * 0.5;
        ev = 0.999 * ev + 0.001 * 0.25;
        const double mh = em / (1.0 - std::pow(0.9, step));
        const double vh = ev / (1.0 - std::pow(0.999, step));
        expect -= 0.1 * mh / (std::sqrt(vh) + config.adam_epsilon);
        CHECK(p[0] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("zero gradients leave parameters exactly unchanged") {
    Model<float> model(tiny_config());
    model.init_params(3);
    const auto before = snapshot_params(model);
    auto state = AdamState<float>::initialized_for(model);
    model.zero_grads();
    TrainConfig config;
    adam_step(model, state, config);
    const auto after = snapshot_params(model);
    CHECK(before == after);
}

TEST_CASE("adam state must mirror parameter shapes") {
    TrainConfig config;
    std::vector<double> p{1.0, 2.0};
    std::vector<double> m{0.0}, v{0.0, 0.0};
    CHECK_THROWS_AS(adam_update_array(p, {0.1, 0.1}, m, v, 1, config), InvalidInput);
}

TEST_CASE("training with epochs=0 is a no-op") {
    Model<float> model(tiny_config());
    model.init_params(11);
    const auto before = snapshot_params(model);
    TrainConfig config;
    config.epochs = 0;
    const auto set = synthetic_training_set(4, 27, 2, 5);
    const auto history = train(model, set, config);
    CHECK(history.epochs.empty());
    CHECK(snapshot_params(model) == before);
}

TEST_CASE("training is reproducible per seed") {
    const auto set = synthetic_training_set(6, 27, 2, 9);
    TrainConfig config;
    config.epochs = 5;
    config.batch_size = 3;
    config.learning_rate = 1e-3;
    config.seed = 42;

    Model<float> m1(tiny_config());
    m1.init_params(21);
    Model<float> m2(tiny_config());
    m2.init_params(21);
    const auto h1 = train(m1, set, config);
    const auto h2 = train(m2, set, config);

    REQUIRE(h1.epochs.size() == h2.epochs.size());
    for (std::size_t e = 0; e < h1.epochs.size(); ++e) {
        CHECK(h1.epochs[e].train_loss == h2.epochs[e].train_loss);
    }
    CHECK(snapshot_params(m1) == snapshot_params(m2));
}

TEST_CASE("training rejects mismatched coefficient widths") {
    Model<float> model(tiny_config(27, 2));
    model.init_params(1);
    const auto set = synthetic_training_set(4, 27, 3, 5);  // k=3 vs model k=2
    CHECK_THROWS_AS(train(model, set, TrainConfig{}), InvalidInput);
    CHECK_THROWS_AS(train(model, TrainingSet{}, TrainConfig{}), InvalidInput);
}

TEST_CASE("the training loss trends down on a small overfit task") {
    const auto set = synthetic_training_set(8, 27, 2, 31);
    TrainConfig config;
    config.epochs = 120;
    config.batch_size = 8;
    config.learning_rate = 3e-3;
    config.seed = 7;

    Model<float> model(tiny_config());
    model.init_params(13);
    const auto history = train(model, set, config);
    REQUIRE(history.epochs.size() == 120);

    // 50-epoch moving average of the training loss is non-increasing
    auto window_mean = [&](std::size_t start) {
        double sum = 0.0;
        for (std::size_t i = start; i < start + 50; ++i) sum += history.epochs[i].train_loss;
        return sum / 50.0;
    };
    double prev = window_mean(0);
    for (std::size_t start = 1; start + 50 <= history.epochs.size(); ++start) {
        const double current = window_mean(start);
        CHECK(current <= prev + 1e-9);
        prev = current;
    }
    CHECK(history.epochs.back().train_loss < history.epochs.front().train_loss);
}

TEST_CASE("transfer freezes exactly the block parameters") {
    const auto set = synthetic_training_set(6, 27, 2, 77);
    Model<float> model(tiny_config());
    model.init_params(99);

    // give the running stats sane values first
    TrainConfig warm;
    warm.epochs = 3;
    warm.batch_size = 3;
    warm.learning_rate = 1e-3;
    train(model, set, warm);

    std::vector<std::vector<float>> blocks_before, fc_before;
    model.visit_params([&](ParamGroup group, std::vector<float>& w, std::vector<float>&) {
        (group == ParamGroup::block ? blocks_before : fc_before).push_back(w);
    });
    std::vector<std::vector<float>> state_before;
    model.visit_state([&](std::vector<float>& s) { state_before.push_back(s); });

    TrainConfig config;
    config.epochs = 4;
    config.batch_size = 3;
    config.learning_rate = 1e-3;
    const auto history = transfer(model, set, config);
    REQUIRE(history.epochs.size() == 4);
    CHECK(history.epochs.back().train_loss > 0.0);

    std::vector<std::vector<float>> blocks_after, fc_after;
    model.visit_params([&](ParamGroup group, std::vector<float>& w, std::vector<float>&) {
        (group == ParamGroup::block ? blocks_after : fc_after).push_back(w);
    });
    std::vector<std::vector<float>> state_after;
    model.visit_state([&](std::vector<float>& s) { state_after.push_back(s); });

    CHECK(blocks_after == blocks_before);   // bitwise frozen
    CHECK(state_after == state_before);     // running stats frozen too
    CHECK(fc_after != fc_before);           // the head actually moved
}

TEST_CASE("train manifest records config and per-epoch losses") {
    TrainConfig config;
    config.epochs = 2;
    TrainHistory history;
    history.epochs.push_back({1, 3.5, std::nullopt});
    history.epochs.push_back({2, 2.5, 0.125});
    const std::string path = "/tmp/s2s_test_train_manifest.json";
    save_train_manifest(config, history, "abc123", path);
    std::ifstream is(path);
    REQUIRE(is.good());
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"dataset_hash\": \"abc123\"") != std::string::npos);
    CHECK(text.find("\"val_e_aver\"") != std::string::npos);
    std::remove(path.c_str());
}
