#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "s2s/augment.hpp"
#include "s2s/error.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

using namespace s2s;

namespace {

CoeffDataset make_dataset(const std::vector<std::vector<double>>& rows) {
    CoeffDataset d;
    for (const auto& row : rows) {
        d.samples.push_back(Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
        d.provenance.push_back({});
    }
    return d;
}

/// Exhaustive O(n^2) oracle: sorted distances, mean of the first K.
double radius_oracle(int index, const CoeffDataset& d, int K) {
    std::vector<double> dist;
    for (int j = 0; j < static_cast<int>(d.size()); ++j) {
        if (j == index) continue;
        dist.push_back((d.samples[static_cast<std::size_t>(j)] - d.samples[static_cast<std::size_t>(index)]).norm());
    }
    std::sort(dist.begin(), dist.end());
    double sum = 0.0;
    for (int j = 0; j < K; ++j) sum += dist[static_cast<std::size_t>(j)];
    return sum / K;
}

} // namespace

TEST_CASE("neighboring radius of identical samples is zero") {
    const auto d = make_dataset({{1, 2}, {1, 2}, {1, 2}, {1, 2}});
    CHECK(neighboring_radius(0, d, 2) == 0.0);
}

TEST_CASE("neighboring radius by hand: collinear triple") {
    const auto d = make_dataset({{0, 0}, {1, 0}, {2, 0}});
    CHECK(neighboring_radius(0, d, 2) == doctest::Approx(1.5));
    CHECK(neighboring_radius(1, d, 2) == doctest::Approx(1.0));
}

TEST_CASE("neighboring radius matches the exhaustive oracle on random data") {
    std::mt19937 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CoeffDataset d;
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd v(6);
        for (auto& x : v.reshaped()) x = gauss(rng);
        d.samples.push_back(v);
        d.provenance.push_back({});
    }
    for (int i = 0; i < 100; ++i) {
        CHECK(neighboring_radius(i, d, 11) == radius_oracle(i, d, 11));
    }
}

TEST_CASE("neighboring radius input validation") {
    const auto d = make_dataset({{0}, {1}});
    CHECK_THROWS_AS(neighboring_radius(0, d, 2), InvalidInput);
    CHECK_THROWS_AS(neighboring_radius(0, d, 0), InvalidInput);
    CHECK_THROWS_AS(neighboring_radius(5, d, 1), InvalidInput);
}

TEST_CASE("refine leaves a tight dataset unchanged") {
    // equilateral-ish cluster, every gap below the threshold
    const auto d = make_dataset({{0, 0}, {0.1, 0}, {0, 0.1}, {0.1, 0.1}});
    RefineParams params;
    params.K = 2;
    params.threshold_factor = 100.0;
    params.iterations = 2;
    const auto out = refine(d, params);
    CHECK(out.size() == d.size());
}

TEST_CASE("refine inserts the midpoint of a far pair") {
    const auto d = make_dataset({{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}});
    RefineParams params;
    params.K = 1;
    params.threshold_factor = 0.5;
    params.inserts_per_pair = 1;
    params.iterations = 1;
    const auto out = refine(d, params);
    REQUIRE(out.size() == 3);
    CHECK(out.samples[2](0) == doctest::Approx(0.5));
    CHECK(out.samples[2](1) == 0.0);
    CHECK(out.provenance[2].kind == Provenance::Kind::inserted);
    CHECK(out.provenance[2].parent_a == 0);
    CHECK(out.provenance[2].parent_b == 1);
    CHECK(out.provenance[2].t == doctest::Approx(0.5));
}

TEST_CASE("three uniform inserts per pair") {
    const auto d = make_dataset({{0.0}, {1.0}});
    RefineParams params;
    params.K = 1;
    params.threshold_factor = 0.1;
    params.inserts_per_pair = 3;
    params.iterations = 1;
    const auto out = refine(d, params);
    REQUIRE(out.size() == 5);
    CHECK(out.samples[2](0) == doctest::Approx(0.25));
    CHECK(out.samples[3](0) == doctest::Approx(0.50));
    CHECK(out.samples[4](0) == doctest::Approx(0.75));
}

TEST_CASE("inserted duplicates of existing samples are dropped") {
    const auto d = make_dataset({{0.0}, {1.0}, {0.5}});
    RefineParams params;
    params.K = 2;
    params.threshold_factor = 1e-6;
    params.inserts_per_pair = 1;
    params.iterations = 1;
    const auto out = refine(d, params);
    // (0,1) midpoint 0.5 duplicates sample 2 and is dropped; the other two
    // pair midpoints are genuinely new
    CHECK(out.size() == 5);
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = i + 1; j < out.size(); ++j) {
            CHECK((out.samples[i] - out.samples[j]).norm() > 1e-12);
        }
    }
}

TEST_CASE("every inserted sample is the recorded convex combination of its parents") {
    std::mt19937 rng(29);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CoeffDataset d;
    for (int i = 0; i < 40; ++i) {
        Eigen::VectorXd v(4);
        for (auto& x : v.reshaped()) x = gauss(rng);
        d.samples.push_back(v);
        d.provenance.push_back({});
    }
    RefineParams params;  // defaults: 1.8 threshold, midpoint, 2 iterations, K=11
    RefineReport report;
    const auto out = refine(d, params, report);
    CHECK(out.size() >= d.size());

    int inserted = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& p = out.provenance[i];
        if (p.kind != Provenance::Kind::inserted) continue;
        ++inserted;
        const Eigen::VectorXd expected =
            (1.0 - p.t) * out.samples[static_cast<std::size_t>(p.parent_a)] +
            p.t * out.samples[static_cast<std::size_t>(p.parent_b)];
        CHECK((out.samples[i] - expected).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(inserted == static_cast<int>(out.size() - d.size()));
}

TEST_CASE("insertion counts do not grow across iterations on clustered data") {
    std::mt19937 rng(41);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CoeffDataset d;
    for (int c = 0; c < 4; ++c) {
        for (int i = 0; i < 12; ++i) {
            Eigen::VectorXd v(3);
            for (auto& x : v.reshaped()) x = 0.05 * gauss(rng) + 2.0 * c;
            d.samples.push_back(v);
            d.provenance.push_back({});
        }
    }
    RefineParams params;
    params.iterations = 3;
    RefineReport report;
    refine(d, params, report);
    REQUIRE(report.inserted_per_iteration.size() <= 3);
    for (std::size_t i = 1; i < report.inserted_per_iteration.size(); ++i) {
        CHECK(report.inserted_per_iteration[i] <= report.inserted_per_iteration[i - 1]);
    }
}

TEST_CASE("refine rejects an empty dataset") {
    CHECK_THROWS_AS(refine(CoeffDataset{}, RefineParams{}), InvalidInput);
}

TEST_CASE("jsonl round trip") {
    auto d = make_dataset({{0.25, -1.5}, {3.75, 2.0}});
    d.samples.push_back(Eigen::Vector2d(2.0, 0.25));
    d.provenance.push_back({Provenance::Kind::inserted, 0, 1, 0.5});

    const std::string path = "/tmp/s2s_test_coeffs.jsonl";
    save_coeffs_jsonl(d, path);
    const auto loaded = load_coeffs_jsonl(path);
    REQUIRE(loaded.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK((loaded.samples[i] - d.samples[i]).cwiseAbs().maxCoeff() == 0.0);
        CHECK(loaded.provenance[i].kind == d.provenance[i].kind);
    }
    CHECK(loaded.provenance[2].parent_b == 1);
    CHECK(loaded.provenance[2].t == 0.5);
    std::remove(path.c_str());
}

TEST_CASE("binary container round trip") {
    auto d = make_dataset({{0.1, 0.2, 0.3}, {-0.4, 0.5, -0.6}});
    d.samples.push_back(Eigen::Vector3d(0.7, 0.8, 0.9));
    d.provenance.push_back({Provenance::Kind::inserted, 1, 0, 0.25});

    const std::string path = "/tmp/s2s_test_coeffs.s2sc";
    save_coeffs_binary(d, path);
    const auto loaded = load_coeffs_binary(path);
    REQUIRE(loaded.size() == d.size());
    REQUIRE(loaded.k() == 3);
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK((loaded.samples[i] - d.samples[i]).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(loaded.provenance[2].kind == Provenance::Kind::inserted);
    CHECK(loaded.provenance[2].parent_a == 1);
    CHECK(loaded.provenance[2].t == 0.25);
    std::remove(path.c_str());
}
