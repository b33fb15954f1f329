#include "s2s/mesh.hpp"

#include "s2s/error.hpp"
#include "s2s/io_util.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace s2s {

Mesh Mesh::from_flat(const Eigen::VectorXd& flat,
                     const std::vector<std::array<std::int32_t, 3>>& triangles) {
    if (flat.size() % 3 != 0) throw InvalidInput("flat vertex vector size not divisible by 3");
    Mesh mesh;
    mesh.vertices = Eigen::Map<const Eigen::Matrix3Xd>(flat.data(), 3, flat.size() / 3);
    mesh.triangles = triangles;
    mesh.validate();
    return mesh;
}

void Mesh::validate() const {
    const int n = vertex_count();
    for (const auto& tri : triangles) {
        for (int idx : tri) {
            if (idx < 0 || idx >= n) throw InvalidInput("triangle index out of range");
        }
    }
}

Mesh load_obj(const std::string& path) {
    auto is = open_input(path, std::ios::in);
    std::vector<Eigen::Vector3d> verts;
    std::vector<std::array<std::int32_t, 3>> tris;
    std::string line;
    while (std::getline(is, line)) {
        if (line.size() < 2) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Eigen::Vector3d v;
            ls >> v.x() >> v.y() >> v.z();
            if (!ls) throw IoError("malformed vertex record in " + path);
            verts.push_back(v);
        } else if (tag == "f") {
            std::array<std::int32_t, 3> f{};
            for (int i = 0; i < 3; ++i) {
                std::string corner;
                ls >> corner;
                if (corner.empty()) throw IoError("malformed face record in " + path);
                // accept v, v/vt, v/vt/vn; only the vertex index is used
                f[i] = static_cast<std::int32_t>(std::stol(corner)) - 1;
            }
            tris.push_back(f);
        }
    }
    if (verts.empty()) throw IoError("no vertices in " + path);
    Mesh mesh;
    mesh.vertices.resize(3, static_cast<Eigen::Index>(verts.size()));
    for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.col(static_cast<Eigen::Index>(i)) = verts[i];
    mesh.triangles = std::move(tris);
    mesh.validate();
    return mesh;
}

void save_obj(const Mesh& mesh, const std::string& path) {
    auto os = open_output(path, std::ios::out);
    char buf[128];
    for (Eigen::Index i = 0; i < mesh.vertices.cols(); ++i) {
        // %.17g round-trips doubles exactly
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n",
                      mesh.vertices(0, i), mesh.vertices(1, i), mesh.vertices(2, i));
        os << buf;
    }
    for (const auto& tri : mesh.triangles) {
        os << "f " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

} // namespace s2s
