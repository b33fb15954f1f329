#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "s2s/body_factory.hpp"
#include "s2s/error.hpp"
#include "s2s/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

using namespace s2s;

namespace {

Mesh ring_pair_mesh(double radius, int resolution) {
    Mesh m;
    m.vertices.resize(3, 2 * resolution);
    for (int r = 0; r < 2; ++r) {
        for (int i = 0; i < resolution; ++i) {
            const double theta = 2.0 * std::numbers::pi * i / resolution;
            m.vertices.col(r * resolution + i) =
                Eigen::Vector3d(radius * std::cos(theta), r * 0.1, radius * std::sin(theta));
        }
    }
    for (int i = 0; i < resolution; ++i) {
        const int a = i, b = (i + 1) % resolution;
        m.triangles.push_back({a, b, resolution + a});
        m.triangles.push_back({b, resolution + b, resolution + a});
    }
    return m;
}

FeatureCurve ring_curve(const Mesh& mesh, int resolution) {
    FeatureCurve curve;
    curve.name = "ring";
    for (int i = 0; i < resolution; ++i) {
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
            const auto& tri = mesh.triangles[t];
            bool found = false;
            for (int c = 0; c < 3; ++c) {
                if (tri[static_cast<std::size_t>(c)] == i) {
                    FeatureCurve::Anchor anchor{static_cast<std::int32_t>(t), {0, 0, 0}};
                    anchor.bary[static_cast<std::size_t>(c)] = 1.0;
                    curve.anchors.push_back(anchor);
                    found = true;
                    break;
                }
            }
            if (found) break;
        }
    }
    return curve;
}

} // namespace

TEST_CASE("identical meshes have zero errors") {
    const Mesh body = generate_body(BodyParams{});
    CHECK(e_max(body, body) == 0.0);
    CHECK(e_aver(body, body) == 0.0);
}

TEST_CASE("a single displaced vertex forces E_max = d and E_aver = d/N") {
    const Mesh truth = generate_body(BodyParams{});
    Mesh pred = truth;
    const double d = 0.037;
    pred.vertices(0, 5) += d;
    CHECK(e_max(truth, pred) == doctest::Approx(d).epsilon(1e-12));
    CHECK(e_aver(truth, pred) == doctest::Approx(d / truth.vertex_count()).epsilon(1e-12));
    CHECK(e_aver(truth, pred) <= e_max(truth, pred));
}

TEST_CASE("errors match a direct loop oracle under random perturbations") {
    const Mesh truth = generate_body(BodyParams{});
    Mesh pred = truth;
    std::mt19937 rng(3);
    std::normal_distribution<double> gauss(0.0, 0.01);
    for (Eigen::Index i = 0; i < pred.vertices.size(); ++i) pred.vertices(i) += gauss(rng);

    double oracle_max = 0.0, oracle_sum = 0.0;
    for (int v = 0; v < truth.vertex_count(); ++v) {
        const double d = (truth.vertices.col(v) - pred.vertices.col(v)).norm();
        oracle_max = std::max(oracle_max, d);
        oracle_sum += d;
    }
    CHECK(e_max(truth, pred) == oracle_max);
    CHECK(e_aver(truth, pred) == oracle_sum / truth.vertex_count());
    CHECK(e_aver(truth, pred) <= e_max(truth, pred));
}

TEST_CASE("connectivity mismatch is rejected") {
    const Mesh a = generate_body(BodyParams{});
    Mesh b = a;
    b.triangles.pop_back();
    CHECK_THROWS_AS(e_max(a, b), InvalidInput);
}

TEST_CASE("summarize averages per-sample errors") {
    SUBCASE("single sample") {
        const auto s = summarize({0.5}, {0.2});
        CHECK(s.mean_e_max == 0.5);
        CHECK(s.mean_e_aver == 0.2);
        CHECK(s.sample_count == 1);
    }
    SUBCASE("two samples") {
        const auto s = summarize({2.0, 4.0}, {1.0, 3.0});
        CHECK(s.mean_e_max == 3.0);
        CHECK(s.mean_e_aver == 2.0);
    }
    SUBCASE("empty input is invalid") {
        CHECK_THROWS_AS(summarize({}, {}), InvalidInput);
        CHECK_THROWS_AS(summarize({1.0}, {}), InvalidInput);
    }
}

TEST_CASE("empirical cdf is non-decreasing from >0 to 1") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::vector<double> values(257);
    for (auto& v : values) v = u(rng);
    const auto cdf = empirical_cdf(values);
    REQUIRE(cdf.size() == values.size());
    CHECK(cdf.front().second > 0.0);
    CHECK(cdf.back().second == 1.0);
    for (std::size_t i = 1; i < cdf.size(); ++i) {
        CHECK(cdf[i].first >= cdf[i - 1].first);
        CHECK(cdf[i].second >= cdf[i - 1].second);
    }
}

TEST_CASE("histogram uses 40 uniform bins over [0, max]") {
    std::vector<double> values{0.1, 0.5, 1.0, 2.0, 3.9, 4.0};
    const auto bins = histogram(values);
    REQUIRE(bins.size() == 40);
    CHECK(bins.front().lower == 0.0);
    CHECK(bins.back().upper == doctest::Approx(4.0));
    int total = 0;
    for (const auto& b : bins) total += b.count;
    CHECK(total == static_cast<int>(values.size()));
}

TEST_CASE("girth of a cylinder ring approximates the circumference") {
    const double r = 0.35;
    const int resolution = 32;
    const Mesh mesh = ring_pair_mesh(r, resolution);
    const FeatureCurve curve = ring_curve(mesh, resolution);
    REQUIRE(curve.anchors.size() == static_cast<std::size_t>(resolution));
    const double measured = girth(mesh, curve);
    const double circumference = 2.0 * std::numbers::pi * r;
    CHECK(std::abs(measured - circumference) / circumference < 0.01);
}

TEST_CASE("girth scales exactly with the mesh") {
    const int resolution = 32;
    Mesh mesh = ring_pair_mesh(0.4, resolution);
    const FeatureCurve curve = ring_curve(mesh, resolution);
    const double g1 = girth(mesh, curve);
    Mesh scaled = mesh;
    scaled.vertices *= 3.5;
    const double g2 = girth(scaled, curve);
    CHECK(std::abs(g2 - 3.5 * g1) / (3.5 * g1) <= 1e-12);
}

TEST_CASE("girth closes the loop with the body factory") {
    BodyParams params;
    params.waist_girth = 0.84;
    const Mesh body = generate_body(params);
    const auto curves = template_feature_curves(body);
    for (const auto& curve : curves) {
        if (curve.name == "waist") {
            CHECK(std::abs(girth(body, curve) - params.waist_girth) / params.waist_girth < 0.01);
        }
    }
}

TEST_CASE("feature curve validation") {
    const Mesh mesh = ring_pair_mesh(0.3, 8);
    FeatureCurve bad;
    bad.name = "x";
    bad.anchors = {{1000, {1, 0, 0}}, {0, {1, 0, 0}}, {1, {1, 0, 0}}};
    CHECK_THROWS_AS(girth(mesh, bad), InvalidInput);

    FeatureCurve bad_bary;
    bad_bary.name = "y";
    bad_bary.anchors = {{0, {0.5, 0.2, 0.1}}, {1, {1, 0, 0}}, {2, {1, 0, 0}}};
    CHECK_THROWS_AS(girth(mesh, bad_bary), InvalidInput);
}

TEST_CASE("girth error stats are the mean and stddev of absolute errors") {
    const auto stats = girth_error_stats("waist", {1.0, 2.0, 3.0}, {1.5, 1.5, 3.5});
    CHECK(stats.mean_abs_error == doctest::Approx(0.5));
    CHECK(stats.stddev_abs_error == doctest::Approx(0.0));
    const auto stats2 = girth_error_stats("hip", {1.0, 1.0}, {1.0, 2.0});
    CHECK(stats2.mean_abs_error == doctest::Approx(0.5));
    CHECK(stats2.stddev_abs_error == doctest::Approx(0.5));
}

TEST_CASE("report files are written") {
    ErrorSummary summary = summarize({1.0, 2.0}, {0.5, 1.5});
    summary.girth_errors.push_back(girth_error_stats("waist", {1.0}, {1.2}));
    const std::string base = "/tmp/s2s_test_metrics";
    save_summary_json(summary, base + ".json");
    save_summary_csv(summary, base + ".csv");
    save_histogram_csv(histogram(summary.per_sample_e_aver, 10), base + "_hist.csv");
    save_cdf_csv(empirical_cdf(summary.per_sample_e_aver), base + "_cdf.csv");
    for (const char* suffix : {".json", ".csv", "_hist.csv", "_cdf.csv"}) {
        std::ifstream is(base + suffix);
        CHECK(is.good());
        std::remove((base + suffix).c_str());
    }
}
