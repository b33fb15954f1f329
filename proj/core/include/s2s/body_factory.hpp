#pragma once

#include "s2s/mesh.hpp"
#include "s2s/metrics.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace s2s {

/// Parameters of a synthetic body. Girths are full perimeters in meters.
struct BodyParams {
    double height = 1.75;
    double chest_girth = 0.95;
    double waist_girth = 0.80;
    double hip_girth = 0.98;
    double limb_thickness = 0.09;
    double shoulder_width = 0.44;
    std::uint64_t seed = 0;  // provenance only; the generator is deterministic

    void validate() const;
};

struct Population {
    std::vector<Mesh> meshes;
    std::vector<BodyParams> params;

    std::size_t size() const { return meshes.size(); }
};

/// Inclusive uniform sampling ranges for sample_population.
struct ParamRanges {
    std::pair<double, double> height{1.50, 1.95};
    std::pair<double, double> chest_girth{0.82, 1.12};
    std::pair<double, double> waist_girth{0.62, 1.02};
    std::pair<double, double> hip_girth{0.82, 1.14};
    std::pair<double, double> limb_thickness{0.07, 0.11};
    std::pair<double, double> shoulder_width{0.36, 0.50};
};

// Normalized heights of the tape-measure loci on the template.
inline constexpr double kChestHeightFraction = 0.72;
inline constexpr double kWaistHeightFraction = 0.62;
inline constexpr double kHipHeightFraction = 0.52;

/// Number of vertices per cross-section ring.
inline constexpr int kRingResolution = 32;

/// Builds the stacked-ring humanoid for the given parameters. The triangle
/// list never varies with the parameters, every vertex coordinate is linear
/// in them, and measured girths at the three loci match the requested
/// perimeters exactly up to ring discretization.
Mesh generate_body(const BodyParams& params);

/// Draws n bodies with independently uniform parameters; a pure function of
/// (n, ranges, seed).
Population sample_population(int n, const ParamRanges& ranges, std::uint64_t seed);

/// Closed feature curves (chest, waist, hip) on the generator's template:
/// the measurement rings expressed as barycentric anchors.
std::vector<FeatureCurve> template_feature_curves(const Mesh& template_mesh);

/// JSON manifest with seed, ranges, per-body parameters and OBJ file names.
void save_population_manifest(const Population& population, std::uint64_t seed,
                              const ParamRanges& ranges,
                              const std::vector<std::string>& files,
                              const std::string& path);

} // namespace s2s
