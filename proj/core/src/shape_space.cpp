#include "s2s/shape_space.hpp"

#include "s2s/error.hpp"
#include "s2s/io_util.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace s2s {

double ShapeSpace::orthonormality_error() const {
    const Eigen::MatrixXd gram = components.transpose() * components;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k(), k());
    return (gram - eye).cwiseAbs().maxCoeff();
}

HeightNormalized normalize_height(const Mesh& mesh, int axis) {
    if (axis < 0 || axis > 2) throw InvalidInput("height axis must be 0, 1 or 2");
    if (mesh.vertex_count() < 3) throw InvalidInput("mesh needs at least 3 vertices");
    const double lo = mesh.vertices.row(axis).minCoeff();
    const double hi = mesh.vertices.row(axis).maxCoeff();
    const double height = hi - lo;
    if (!(height > 0.0) || !std::isfinite(height)) {
        throw InvalidInput("degenerate mesh: zero vertical extent");
    }
    HeightNormalized out{mesh, height};
    out.mesh.vertices /= height;
    return out;
}

ShapeSpace fit_pca(const std::vector<Mesh>& dataset, double variance_target) {
    if (dataset.size() < 2) throw InvalidInput("fit_pca needs at least 2 meshes");
    if (!(variance_target > 0.0) || variance_target > 1.0) {
        throw InvalidInput("variance_target must be in (0, 1]");
    }
    const Mesh& first = dataset.front();
    for (const Mesh& m : dataset) {
        if (!m.same_connectivity(first)) throw InvalidInput("meshes have inconsistent connectivity");
    }

    const Eigen::Index dim = first.vertices.size();  // 3N
    const Eigen::Index count = static_cast<Eigen::Index>(dataset.size());

    Eigen::MatrixXd data(dim, count);
    for (Eigen::Index j = 0; j < count; ++j) {
        data.col(j) = dataset[static_cast<std::size_t>(j)].flatten();
    }
    const Eigen::VectorXd mean = data.rowwise().mean();
    data.colwise() -= mean;

    // Gram-matrix route: eigenvectors v of X^T X give principal directions
    // X v / sqrt(lambda) with the same nonzero spectrum as X X^T.
    const Eigen::MatrixXd gram = data.transpose() * data;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");

    // Eigen returns ascending order; walk from the back.
    const Eigen::VectorXd evals = solver.eigenvalues();
    const double total = std::max(evals.sum(), 0.0);
    if (total <= 0.0 || evals(count - 1) <= total * 1e-14) {
        throw NumericalError("dataset has zero shape variance, no principal directions exist");
    }

    const double eigen_floor = evals(count - 1) * 1e-12;
    std::vector<Eigen::Index> order;
    for (Eigen::Index i = count - 1; i >= 0; --i) {
        if (evals(i) > eigen_floor) order.push_back(i);
    }

    int k = 0;
    double captured = 0.0;
    for (Eigen::Index idx : order) {
        captured += evals(idx);
        ++k;
        if (captured / total >= variance_target) break;
    }

    ShapeSpace space;
    space.mean = mean;
    space.template_triangles = first.triangles;
    space.components.resize(dim, k);
    space.variances.resize(k);
    const double denom = static_cast<double>(count - 1);
    for (int j = 0; j < k; ++j) {
        const Eigen::Index idx = order[static_cast<std::size_t>(j)];
        space.components.col(j) = data * solver.eigenvectors().col(idx) / std::sqrt(evals(idx));
        space.variances(j) = evals(idx) / denom;
    }
    space.variance_captured = captured / total;
    return space;
}

ShapeCoeffs encode(const ShapeSpace& space, const Mesh& mesh) {
    if (mesh.vertex_count() != space.vertex_count() || mesh.triangles != space.template_triangles) {
        throw InvalidInput("mesh connectivity does not match the shape space template");
    }
    return ShapeCoeffs{space.components.transpose() * (mesh.flatten() - space.mean)};
}

Mesh decode(const ShapeSpace& space, const ShapeCoeffs& coeffs) {
    if (coeffs.size() != space.k()) throw InvalidInput("coefficient length does not match space rank");
    const Eigen::VectorXd flat = space.mean + space.components * coeffs.values;
    return Mesh::from_flat(flat, space.template_triangles);
}

namespace {
constexpr char kSpaceMagic[] = "S2SSPACE";
constexpr std::uint32_t kSpaceVersion = 1;
} // namespace

void save_space(const ShapeSpace& space, const std::string& path) {
    auto os = open_output(path);
    write_magic(os, kSpaceMagic);
    write_le<std::uint32_t>(os, kSpaceVersion);
    const std::uint64_t n = static_cast<std::uint64_t>(space.vertex_count());
    write_le<std::uint64_t>(os, n);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(space.k()));
    write_le_array(os, space.mean.data(), static_cast<std::size_t>(space.mean.size()));
    write_le_array(os, space.variances.data(), static_cast<std::size_t>(space.variances.size()));
    // components row-major
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = space.components;
    write_le_array(os, rm.data(), static_cast<std::size_t>(rm.size()));
    write_le<std::uint64_t>(os, static_cast<std::uint64_t>(space.template_triangles.size()));
    for (const auto& tri : space.template_triangles) {
        for (int c : tri) write_le<std::uint32_t>(os, static_cast<std::uint32_t>(c));
    }
}

ShapeSpace load_space(const std::string& path) {
    auto is = open_input(path);
    expect_magic(is, kSpaceMagic);
    const auto version = read_le<std::uint32_t>(is);
    if (version != kSpaceVersion) throw IoError("unsupported shape-space container version");
    const auto n = read_le<std::uint64_t>(is);
    const auto k = read_le<std::uint32_t>(is);
    ShapeSpace space;
    space.mean.resize(static_cast<Eigen::Index>(3 * n));
    read_le_array(is, space.mean.data(), static_cast<std::size_t>(space.mean.size()));
    space.variances.resize(k);
    read_le_array(is, space.variances.data(), k);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(3 * n, k);
    read_le_array(is, rm.data(), static_cast<std::size_t>(rm.size()));
    space.components = rm;
    const auto tri_count = read_le<std::uint64_t>(is);
    space.template_triangles.resize(tri_count);
    for (auto& tri : space.template_triangles) {
        for (auto& c : tri) c = static_cast<std::int32_t>(read_le<std::uint32_t>(is));
    }
    // The captured fraction needs the discarded spectrum, which only the
    // sidecar records.
    space.variance_captured = 1.0;
    std::ifstream sidecar(path + ".json");
    if (sidecar) {
        try {
            nlohmann::json j;
            sidecar >> j;
            space.variance_captured = j.value("variance_captured", 1.0);
        } catch (const nlohmann::json::exception&) {
            // sidecar is advisory; ignore a malformed one
        }
    }
    return space;
}

void save_space_sidecar(const std::string& path, double variance_target,
                        std::size_t sample_count, std::uint64_t dataset_hash,
                        const ShapeSpace& space) {
    nlohmann::json j;
    j["format"] = "s2s-shape-space";
    j["variance_target"] = variance_target;
    j["variance_captured"] = space.variance_captured;
    j["sample_count"] = sample_count;
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(dataset_hash));
    j["dataset_hash"] = hex;
    j["k"] = space.k();
    j["vertex_count"] = space.vertex_count();
    j["height_axis"] = "y";
    auto os = open_output(path + ".json", std::ios::out);
    os << j.dump(2) << '\n';
}

} // namespace s2s
