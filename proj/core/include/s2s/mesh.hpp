#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace s2s {

/// Fixed-topology triangle mesh. All meshes in a dataset share the same
/// triangle list and vertex count; vertices are in meters.
struct Mesh {
    Eigen::Matrix3Xd vertices;                       // one column per vertex
    std::vector<std::array<std::int32_t, 3>> triangles;

    int vertex_count() const { return static_cast<int>(vertices.cols()); }

    /// Stacks vertices into a 3N vector (x0,y0,z0,x1,...).
    Eigen::VectorXd flatten() const {
        return Eigen::Map<const Eigen::VectorXd>(vertices.data(), vertices.size());
    }

    /// Rebuilds a mesh from a flat 3N vector on the given connectivity.
    static Mesh from_flat(const Eigen::VectorXd& flat,
                          const std::vector<std::array<std::int32_t, 3>>& triangles);

    bool same_connectivity(const Mesh& other) const {
        return vertex_count() == other.vertex_count() && triangles == other.triangles;
    }

    /// Checks that every triangle index is < vertex_count.
    void validate() const;
};

/// Wavefront-OBJ-compatible text I/O, v/f records only.
Mesh load_obj(const std::string& path);
void save_obj(const Mesh& mesh, const std::string& path);

} // namespace s2s
