#pragma once

#include "s2s/mesh.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace s2s {

/// Coordinates of a body in the shape space; the regression target.
struct ShapeCoeffs {
    Eigen::VectorXd values;

    int size() const { return static_cast<int>(values.size()); }
};

/// Linear statistical body model: mean shape plus an orthonormal basis of
/// principal directions with their variances.
struct ShapeSpace {
    Eigen::VectorXd mean;        // 3N, unit-height meters
    Eigen::MatrixXd components;  // 3N x k, orthonormal columns
    Eigen::VectorXd variances;   // k, non-increasing
    double variance_captured = 0.0;
    std::vector<std::array<std::int32_t, 3>> template_triangles;

    int k() const { return static_cast<int>(components.cols()); }
    int vertex_count() const { return static_cast<int>(mean.size() / 3); }

    /// max |components^T components - I|; the fit keeps this <= 1e-8.
    double orthonormality_error() const;
};

struct HeightNormalized {
    Mesh mesh;     // vertical extent 1.0
    double scale;  // original height
};

/// Scales a mesh isotropically so its extent along `axis` (default Y)
/// becomes 1. Throws InvalidInput on degenerate (zero-height) meshes.
HeightNormalized normalize_height(const Mesh& mesh, int axis = 1);

/// Fits the PCA shape model. k is the smallest rank whose cumulative
/// eigenvalue fraction reaches variance_target. The eigendecomposition runs
/// on the H x H Gram matrix of the centered data, which has the same
/// spectrum as the 3N x 3N covariance but stays tractable for H << 3N.
///
/// Throws InvalidInput on fewer than two meshes or mixed connectivity and
/// NumericalError when the dataset has no variance at all.
ShapeSpace fit_pca(const std::vector<Mesh>& dataset, double variance_target);

/// Projects a mesh onto the space: phi = components^T (B - mean).
ShapeCoeffs encode(const ShapeSpace& space, const Mesh& mesh);

/// Reconstructs a mesh: B = mean + components * phi, on the template
/// connectivity.
Mesh decode(const ShapeSpace& space, const ShapeCoeffs& coeffs);

// Container file ("S2SSPACE"): 8-byte magic, u32 version, u64 N, u32 k,
// then mean (3N f64), variances (k f64), components (3N*k f64 row-major),
// then u64 triangle count and 3 x u32 indices per triangle; all
// little-endian. A JSON sidecar at <path>.json carries provenance.
void save_space(const ShapeSpace& space, const std::string& path);
ShapeSpace load_space(const std::string& path);

/// Writes the provenance sidecar next to the container.
void save_space_sidecar(const std::string& path, double variance_target,
                        std::size_t sample_count, std::uint64_t dataset_hash,
                        const ShapeSpace& space);

} // namespace s2s
