#include "s2s/body_factory.hpp"

#include "s2s/error.hpp"
#include "s2s/io_util.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace s2s {

namespace {

// Normalized ring heights, bottom to top. The tape-measure loci (0.52,
// 0.62, 0.72) and the shoulder line (0.82) sit exactly on rings so the
// requested perimeters are hit without interpolation.
constexpr std::array<double, 20> kRingHeights = {
    0.004, 0.03, 0.08, 0.14, 0.22, 0.30, 0.38, 0.46,
    0.52,  0.57, 0.62, 0.67, 0.72, 0.77, 0.82, 0.86,
    0.88,  0.91, 0.955, 0.996};

constexpr int kHipRing = 8;
constexpr int kWaistRing = 10;
constexpr int kChestRing = 12;

// Depth-to-width ratios of the torso ellipses.
constexpr double kHipAspect = 0.72;
constexpr double kWaistAspect = 0.75;
constexpr double kChestAspect = 0.72;

/// Perimeter of the inscribed kRingResolution-gon of an ellipse with
/// semi-axes (1, aspect).
double unit_ellipse_ring_perimeter(double aspect) {
    double perimeter = 0.0;
    const double step = 2.0 * std::numbers::pi / kRingResolution;
    double px = 1.0, py = 0.0;
    for (int i = 1; i <= kRingResolution; ++i) {
        const double x = std::cos(step * i);
        const double y = aspect * std::sin(step * i);
        perimeter += std::hypot(x - px, y - py);
        px = x;
        py = y;
    }
    return perimeter;
}

struct RingShape {
    double half_width;  // x semi-axis
    double half_depth;  // z semi-axis
};

/// Control profile: piecewise-linear (normalized height -> semi-axes).
/// Every output is linear in the BodyParams lengths, so populations span an
/// affine subspace of dimension <= 6.
std::vector<std::pair<double, RingShape>> control_profile(const BodyParams& p) {
    const double hip_a = p.hip_girth / unit_ellipse_ring_perimeter(kHipAspect);
    const double waist_a = p.waist_girth / unit_ellipse_ring_perimeter(kWaistAspect);
    const double chest_a = p.chest_girth / unit_ellipse_ring_perimeter(kChestAspect);
    const double limb = p.limb_thickness;
    const double h = p.height;
    return {
        {0.004, {1.00 * limb, 0.50 * limb}},                    // ankles
        {0.30, {1.20 * limb, 0.60 * limb}},                     // knees
        {kHipHeightFraction, {hip_a, kHipAspect * hip_a}},
        {kWaistHeightFraction, {waist_a, kWaistAspect * waist_a}},
        {kChestHeightFraction, {chest_a, kChestAspect * chest_a}},
        {0.82, {0.5 * p.shoulder_width, 0.30 * p.shoulder_width}},
        {0.86, {0.055 * h, 0.055 * h}},                         // neck base
        {0.88, {0.055 * h, 0.055 * h}},                         // neck top
        {0.91, {0.075 * h, 0.085 * h}},                         // chin
        {0.955, {0.085 * h, 0.095 * h}},                        // head
        {0.996, {0.035 * h, 0.040 * h}},                        // crown
    };
}

RingShape profile_at(const std::vector<std::pair<double, RingShape>>& profile, double t) {
    if (t <= profile.front().first) return profile.front().second;
    if (t >= profile.back().first) return profile.back().second;
    for (std::size_t i = 1; i < profile.size(); ++i) {
        if (t <= profile[i].first) {
            const auto& [t0, s0] = profile[i - 1];
            const auto& [t1, s1] = profile[i];
            const double w = (t - t0) / (t1 - t0);
            return {s0.half_width + w * (s1.half_width - s0.half_width),
                    s0.half_depth + w * (s1.half_depth - s0.half_depth)};
        }
    }
    return profile.back().second;
}

std::vector<std::array<std::int32_t, 3>> template_triangles() {
    std::vector<std::array<std::int32_t, 3>> tris;
    const int rings = static_cast<int>(kRingHeights.size());
    const int n = kRingResolution;
    auto ring_vertex = [n](int ring, int i) { return ring * n + (i % n); };
    const std::int32_t bottom_cap = rings * n;
    const std::int32_t top_cap = rings * n + 1;

    for (int i = 0; i < n; ++i) {
        tris.push_back({bottom_cap, ring_vertex(0, i + 1), ring_vertex(0, i)});
    }
    for (int r = 0; r + 1 < rings; ++r) {
        for (int i = 0; i < n; ++i) {
            const auto a = ring_vertex(r, i);
            const auto b = ring_vertex(r, i + 1);
            const auto c = ring_vertex(r + 1, i);
            const auto d = ring_vertex(r + 1, i + 1);
            tris.push_back({a, b, c});
            tris.push_back({b, d, c});
        }
    }
    for (int i = 0; i < n; ++i) {
        tris.push_back({top_cap, ring_vertex(rings - 1, i), ring_vertex(rings - 1, i + 1)});
    }
    return tris;
}

} // namespace

void BodyParams::validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(height) || !positive(chest_girth) || !positive(waist_girth) ||
        !positive(hip_girth) || !positive(limb_thickness) || !positive(shoulder_width)) {
        throw InvalidInput("body parameters must be positive and finite");
    }
    for (double girth : {chest_girth, waist_girth, hip_girth}) {
        if (girth < 0.3 * height || girth > 1.5 * height) {
            throw InvalidInput("girth outside the plausibility clamp [0.3h, 1.5h]");
        }
    }
}

Mesh generate_body(const BodyParams& params) {
    params.validate();
    const auto profile = control_profile(params);
    const int rings = static_cast<int>(kRingHeights.size());
    const int n = kRingResolution;

    Mesh mesh;
    mesh.vertices.resize(3, rings * n + 2);
    const double step = 2.0 * std::numbers::pi / n;
    for (int r = 0; r < rings; ++r) {
        const RingShape shape = profile_at(profile, kRingHeights[static_cast<std::size_t>(r)]);
        const double y = kRingHeights[static_cast<std::size_t>(r)] * params.height;
        for (int i = 0; i < n; ++i) {
            const double angle = step * i;
            mesh.vertices.col(r * n + i) = Eigen::Vector3d(
                shape.half_width * std::cos(angle), y, shape.half_depth * std::sin(angle));
        }
    }
    mesh.vertices.col(rings * n) = Eigen::Vector3d(0.0, 0.0, 0.0);
    mesh.vertices.col(rings * n + 1) = Eigen::Vector3d(0.0, params.height, 0.0);
    mesh.triangles = template_triangles();
    return mesh;
}

Population sample_population(int n, const ParamRanges& ranges, std::uint64_t seed) {
    if (n < 2) throw InvalidInput("population needs at least 2 bodies");
    auto check_range = [](const std::pair<double, double>& r) {
        if (!(r.first <= r.second) || !(r.first > 0.0)) throw InvalidInput("empty or non-positive parameter range");
    };
    check_range(ranges.height);
    check_range(ranges.chest_girth);
    check_range(ranges.waist_girth);
    check_range(ranges.hip_girth);
    check_range(ranges.limb_thickness);
    check_range(ranges.shoulder_width);

    std::mt19937_64 rng(seed);
    auto draw = [&rng](const std::pair<double, double>& r) {
        return std::uniform_real_distribution<double>(r.first, r.second)(rng);
    };

    Population population;
    population.meshes.reserve(static_cast<std::size_t>(n));
    population.params.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        BodyParams p;
        p.height = draw(ranges.height);
        p.chest_girth = draw(ranges.chest_girth);
        p.waist_girth = draw(ranges.waist_girth);
        p.hip_girth = draw(ranges.hip_girth);
        p.limb_thickness = draw(ranges.limb_thickness);
        p.shoulder_width = draw(ranges.shoulder_width);
        p.seed = seed;
        population.meshes.push_back(generate_body(p));
        population.params.push_back(p);
    }
    return population;
}

std::vector<FeatureCurve> template_feature_curves(const Mesh& template_mesh) {
    const int n = kRingResolution;
    auto ring_curve = [&](const std::string& name, int ring) {
        FeatureCurve curve;
        curve.name = name;
        for (int i = 0; i < n; ++i) {
            const std::int32_t vertex = ring * n + i;
            // find a triangle that owns this vertex and anchor at its corner
            for (std::size_t t = 0; t < template_mesh.triangles.size(); ++t) {
                const auto& tri = template_mesh.triangles[t];
                for (int c = 0; c < 3; ++c) {
                    if (tri[static_cast<std::size_t>(c)] == vertex) {
                        FeatureCurve::Anchor anchor;
                        anchor.triangle = static_cast<std::int32_t>(t);
                        anchor.bary = {0.0, 0.0, 0.0};
                        anchor.bary[static_cast<std::size_t>(c)] = 1.0;
                        curve.anchors.push_back(anchor);
                        t = template_mesh.triangles.size() - 1;  // found
                        break;
                    }
                }
            }
        }
        return curve;
    };
    return {ring_curve("chest", kChestRing), ring_curve("waist", kWaistRing),
            ring_curve("hip", kHipRing)};
}

void save_population_manifest(const Population& population, std::uint64_t seed,
                              const ParamRanges& ranges,
                              const std::vector<std::string>& files,
                              const std::string& path) {
    if (files.size() != population.size()) throw InvalidInput("one file name per body required");
    nlohmann::json j;
    j["format"] = "s2s-population";
    j["seed"] = seed;
    j["ranges"] = {
        {"height", {ranges.height.first, ranges.height.second}},
        {"chest_girth", {ranges.chest_girth.first, ranges.chest_girth.second}},
        {"waist_girth", {ranges.waist_girth.first, ranges.waist_girth.second}},
        {"hip_girth", {ranges.hip_girth.first, ranges.hip_girth.second}},
        {"limb_thickness", {ranges.limb_thickness.first, ranges.limb_thickness.second}},
        {"shoulder_width", {ranges.shoulder_width.first, ranges.shoulder_width.second}},
    };
    nlohmann::json bodies = nlohmann::json::array();
    for (std::size_t i = 0; i < population.size(); ++i) {
        const BodyParams& p = population.params[i];
        bodies.push_back({
            {"file", files[i]},
            {"height", p.height},
            {"chest_girth", p.chest_girth},
            {"waist_girth", p.waist_girth},
            {"hip_girth", p.hip_girth},
            {"limb_thickness", p.limb_thickness},
            {"shoulder_width", p.shoulder_width},
        });
    }
    j["bodies"] = std::move(bodies);
    auto os = open_output(path, std::ios::out);
    os << j.dump(2) << '\n';
}

} // namespace s2s
