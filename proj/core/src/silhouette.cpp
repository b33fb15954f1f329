#include "s2s/silhouette.hpp"

#include "s2s/error.hpp"
#include "s2s/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>

namespace s2s {

void Camera::validate() const {
    if (width <= 0 || height <= 0) throw InvalidInput("image size must be positive");
    if (!(focal_px > 0.0) || !(distance_m > 0.0)) throw InvalidInput("camera needs positive focal length and distance");
    if (jitter_std_m < 0.0) throw InvalidInput("jitter std-dev must be non-negative");
}

std::size_t BinaryImage::count() const {
    std::size_t c = 0;
    for (auto b : bits) c += b != 0;
    return c;
}

double ContourSamples::signed_area() const {
    double area2 = 0.0;
    for (int i = 1; i <= M; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        const auto& q = points[i == M ? 1 : static_cast<std::size_t>(i + 1)];
        area2 += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * area2;
}

Eigen::Vector2d ContourSamples::interior_centroid() const {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (int i = 1; i <= M; ++i) c += points[static_cast<std::size_t>(i)];
    return c / M;
}

namespace {

constexpr double kNearPlane = 0.05;  // meters

struct ProjectedPoint {
    double u, v;
};

} // namespace

BinaryImage render_silhouette(const Mesh& mesh, const Camera& camera, std::uint64_t seed) {
    camera.validate();
    if (mesh.vertex_count() < 3 || mesh.triangles.empty()) throw InvalidInput("mesh is degenerate");

    // Side view: quarter turn about the vertical axis so the subject's
    // right side faces the camera; the projection itself stays front-on.
    Eigen::Matrix3Xd verts;
    if (camera.view == View::side) {
        verts.resize(3, mesh.vertices.cols());
        verts.row(0) = mesh.vertices.row(2);
        verts.row(1) = mesh.vertices.row(1);
        verts.row(2) = -mesh.vertices.row(0);
    } else {
        verts = mesh.vertices;
    }

    const Eigen::Vector3d lo = verts.rowwise().minCoeff();
    const Eigen::Vector3d hi = verts.rowwise().maxCoeff();
    const Eigen::Vector3d center = 0.5 * (lo + hi);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, camera.jitter_std_m);
    const double jx = camera.jitter_std_m > 0.0 ? gauss(rng) : 0.0;
    const double jy = camera.jitter_std_m > 0.0 ? gauss(rng) : 0.0;

    const Eigen::Vector3d cam(center.x() + jx, center.y() + jy, center.z() + camera.distance_m);
    const double cx = 0.5 * camera.width;
    const double cy = 0.5 * camera.height;

    std::vector<ProjectedPoint> proj(static_cast<std::size_t>(verts.cols()));
    std::vector<char> valid(static_cast<std::size_t>(verts.cols()), 1);
    for (Eigen::Index i = 0; i < verts.cols(); ++i) {
        const double zc = cam.z() - verts(2, i);
        if (zc <= kNearPlane) {
            valid[static_cast<std::size_t>(i)] = 0;
            continue;
        }
        proj[static_cast<std::size_t>(i)] = {cx + camera.focal_px * (verts(0, i) - cam.x()) / zc,
                                             cy - camera.focal_px * (verts(1, i) - cam.y()) / zc};
    }

    BinaryImage image;
    image.width = camera.width;
    image.height = camera.height;
    image.bits.assign(static_cast<std::size_t>(camera.width) * camera.height, 0);

    for (const auto& tri : mesh.triangles) {
        if (!valid[static_cast<std::size_t>(tri[0])] || !valid[static_cast<std::size_t>(tri[1])] ||
            !valid[static_cast<std::size_t>(tri[2])]) {
            continue;
        }
        const ProjectedPoint& a = proj[static_cast<std::size_t>(tri[0])];
        const ProjectedPoint& b = proj[static_cast<std::size_t>(tri[1])];
        const ProjectedPoint& c = proj[static_cast<std::size_t>(tri[2])];

        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.u, b.u, c.u}) - 0.5)));
        const int x1 = std::min(camera.width - 1, static_cast<int>(std::ceil(std::max({a.u, b.u, c.u}))));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.v, b.v, c.v}) - 0.5)));
        const int y1 = std::min(camera.height - 1, static_cast<int>(std::ceil(std::max({a.v, b.v, c.v}))));
        if (x0 > x1 || y0 > y1) continue;

        auto edge = [](const ProjectedPoint& p, const ProjectedPoint& q, double x, double y) {
            return (q.u - p.u) * (y - p.v) - (q.v - p.v) * (x - p.u);
        };
        for (int y = y0; y <= y1; ++y) {
            const double py = y + 0.5;
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5;
                const double w0 = edge(a, b, px, py);
                const double w1 = edge(b, c, px, py);
                const double w2 = edge(c, a, px, py);
                const bool inside = (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0) ||
                                    (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0);
                if (inside) image.set(x, y);
            }
        }
    }

    if (image.count() == 0) throw RenderError("body projects fully outside the frame");
    return image;
}

namespace {

/// Largest 4-connected foreground component; ties resolved by scan order.
std::pair<std::vector<std::int32_t>, std::int32_t> largest_component(const BinaryImage& image,
                                                                     bool& multiple) {
    const int w = image.width;
    const int h = image.height;
    std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::size_t> sizes;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!image.at(x, y) || label[static_cast<std::size_t>(y) * w + x] >= 0) continue;
            const auto id = static_cast<std::int32_t>(sizes.size());
            std::size_t size = 0;
            std::queue<std::pair<int, int>> frontier;
            frontier.emplace(x, y);
            label[static_cast<std::size_t>(y) * w + x] = id;
            while (!frontier.empty()) {
                const auto [px, py] = frontier.front();
                frontier.pop();
                ++size;
                constexpr int dx[4] = {1, -1, 0, 0};
                constexpr int dy[4] = {0, 0, 1, -1};
                for (int d = 0; d < 4; ++d) {
                    const int nx = px + dx[d];
                    const int ny = py + dy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    auto& l = label[static_cast<std::size_t>(ny) * w + nx];
                    if (image.at(nx, ny) && l < 0) {
                        l = id;
                        frontier.emplace(nx, ny);
                    }
                }
            }
            sizes.push_back(size);
        }
    }
    if (sizes.empty()) return {std::move(label), -1};
    multiple = sizes.size() > 1;
    std::int32_t best = 0;
    for (std::int32_t i = 1; i < static_cast<std::int32_t>(sizes.size()); ++i) {
        if (sizes[static_cast<std::size_t>(i)] > sizes[static_cast<std::size_t>(best)]) best = i;
    }
    return {std::move(label), best};
}

} // namespace

Boundary extract_contour(const BinaryImage& image) {
    if (image.width <= 0 || image.height <= 0 || image.count() == 0) {
        throw RenderError("no contour: image is empty");
    }
    bool multiple = false;
    const auto [label, chosen] = largest_component(image, multiple);
    const int w = image.width;
    const int h = image.height;
    auto is_fg = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < w && y < h &&
               label[static_cast<std::size_t>(y) * w + x] == chosen;
    };

    // Uppermost-leftmost pixel of the chosen component.
    int sx = -1, sy = -1;
    for (int y = 0; y < h && sx < 0; ++y) {
        for (int x = 0; x < w; ++x) {
            if (label[static_cast<std::size_t>(y) * w + x] == chosen) {
                sx = x;
                sy = y;
                break;
            }
        }
    }

    Boundary boundary;
    boundary.multiple_components = multiple;

    // Moore-neighbor tracing: scan the 8-neighborhood of the current pixel
    // clockwise starting just past the backtrack (background) pixel; stop
    // when the start pixel is re-entered with the initial backtrack
    // (Jacob's criterion).
    constexpr int nx8[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    constexpr int ny8[8] = {0, -1, -1, -1, 0, 1, 1, 1};  // W,NW,N,NE,E,SE,S,SW (clockwise on screen)
    auto dir_index = [&](int from_x, int from_y, int to_x, int to_y) {
        for (int d = 0; d < 8; ++d) {
            if (from_x + nx8[d] == to_x && from_y + ny8[d] == to_y) return d;
        }
        throw NumericalError("non-adjacent backtrack pixel");
    };

    int px = sx, py = sy;
    int bx = sx - 1, by = sy;  // west neighbor, guaranteed background
    const int first_bx = bx, first_by = by;
    boundary.points.emplace_back(sx + 0.5, sy + 0.5);

    // Next boundary pixel and its backtrack from the state (p, b).
    auto find_next = [&](int cpx, int cpy, int cbx, int cby, int& qx, int& qy, int& obx,
                         int& oby) {
        const int d0 = dir_index(cpx, cpy, cbx, cby);
        for (int s = 1; s <= 8; ++s) {
            const int d = (d0 + s) % 8;
            if (is_fg(cpx + nx8[d], cpy + ny8[d])) {
                qx = cpx + nx8[d];
                qy = cpy + ny8[d];
                obx = cpx + nx8[(d0 + s - 1) % 8];
                oby = cpy + ny8[(d0 + s - 1) % 8];
                return true;
            }
        }
        return false;
    };

    int second_x = sx, second_y = sy;
    const std::size_t max_steps = 4 * static_cast<std::size_t>(w) * h + 8;
    for (std::size_t steps = 0; steps < max_steps; ++steps) {
        int qx, qy, nbx, nby;
        if (!find_next(px, py, bx, by, qx, qy, nbx, nby)) {
            return boundary;  // isolated single pixel
        }
        if (qx == sx && qy == sy && nbx == first_bx && nby == first_by) {
            return boundary;  // re-entered the start in the initial state
        }
        if (steps > 0 && px == sx && py == sy && qx == second_x && qy == second_y) {
            // About to repeat the first move; the trailing revisit of the
            // start pixel closes the chain implicitly.
            boundary.points.pop_back();
            return boundary;
        }
        if (steps == 0) {
            second_x = qx;
            second_y = qy;
        }
        px = qx;
        py = qy;
        bx = nbx;
        by = nby;
        boundary.points.emplace_back(px + 0.5, py + 0.5);
    }
    throw NumericalError("contour tracing failed to terminate");
}

double boundary_height_px(const Boundary& boundary) {
    if (boundary.points.empty()) throw InvalidInput("empty boundary");
    double lo = boundary.points.front().y(), hi = lo;
    for (const auto& p : boundary.points) {
        lo = std::min(lo, p.y());
        hi = std::max(hi, p.y());
    }
    return hi - lo;
}

ContourSamples resample_contour(const Boundary& boundary, int M, double body_height_px, View view) {
    if (M < 3) throw InvalidInput("M must be at least 3");
    if (boundary.points.size() < static_cast<std::size_t>(M)) {
        throw InvalidInput("boundary shorter than the requested sample count");
    }
    if (!(body_height_px > 0.0)) throw InvalidInput("body height in pixels must be positive");

    // Flip to y-up math coordinates.
    std::vector<Eigen::Vector2d> poly;
    poly.reserve(boundary.points.size());
    for (const auto& p : boundary.points) poly.emplace_back(p.x(), -p.y());

    // Enforce anti-clockwise orientation (positive signed area).
    double area2 = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        area2 += p.x() * q.y() - q.x() * p.y();
    }
    if (area2 < 0.0) std::reverse(poly.begin(), poly.end());

    // Cumulative arc lengths of the closed polyline.
    const std::size_t n = poly.size();
    std::vector<double> cumulative(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        cumulative[i + 1] = cumulative[i] + (poly[(i + 1) % n] - poly[i]).norm();
    }
    const double total = cumulative[n];
    if (!(total > 0.0)) throw InvalidInput("boundary has zero length");

    // Start vertex: maximal y, ties broken toward the bbox center in x.
    double min_x = poly[0].x(), max_x = poly[0].x();
    for (const auto& p : poly) {
        min_x = std::min(min_x, p.x());
        max_x = std::max(max_x, p.x());
    }
    const double center_x = 0.5 * (min_x + max_x);
    std::size_t start = 0;
    for (std::size_t i = 1; i < n; ++i) {
        const double dy = poly[i].y() - poly[start].y();
        if (dy > 0.0 ||
            (dy == 0.0 && std::abs(poly[i].x() - center_x) < std::abs(poly[start].x() - center_x))) {
            start = i;
        }
    }

    auto point_at_arc = [&](double s) {
        s = std::fmod(s, total);
        if (s < 0.0) s += total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
        std::size_t seg = static_cast<std::size_t>(it - cumulative.begin()) - 1;
        if (seg >= n) seg = n - 1;
        const double seg_len = cumulative[seg + 1] - cumulative[seg];
        const double t = seg_len > 0.0 ? (s - cumulative[seg]) / seg_len : 0.0;
        return Eigen::Vector2d(poly[seg] + t * (poly[(seg + 1) % n] - poly[seg]));
    };

    std::vector<Eigen::Vector2d> interior(static_cast<std::size_t>(M));
    const double spacing = total / M;
    for (int j = 0; j < M; ++j) {
        interior[static_cast<std::size_t>(j)] = point_at_arc(cumulative[start] + j * spacing);
    }

    for (auto& p : interior) p /= body_height_px;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : interior) centroid += p;
    centroid /= M;
    for (auto& p : interior) p -= centroid;

    ContourSamples samples;
    samples.view = view;
    samples.M = M;
    samples.points.reserve(static_cast<std::size_t>(M) + 2);
    samples.points.push_back(interior.back());  // copy of the ending point
    samples.points.insert(samples.points.end(), interior.begin(), interior.end());
    samples.points.push_back(interior.front()); // copy of the starting point
    return samples;
}

std::vector<float> contour_to_channels(const ContourSamples& samples) {
    const std::size_t len = samples.points.size();
    std::vector<float> out(2 * len);
    for (std::size_t i = 0; i < len; ++i) {
        out[i] = static_cast<float>(samples.points[i].x());
        out[len + i] = static_cast<float>(samples.points[i].y());
    }
    return out;
}

void save_pbm(const BinaryImage& image, const std::string& path) {
    auto os = open_output(path);
    os << "P4\n" << image.width << ' ' << image.height << '\n';
    const int row_bytes = (image.width + 7) / 8;
    std::vector<std::uint8_t> row(static_cast<std::size_t>(row_bytes));
    for (int y = 0; y < image.height; ++y) {
        std::fill(row.begin(), row.end(), 0);
        for (int x = 0; x < image.width; ++x) {
            if (image.at(x, y)) row[static_cast<std::size_t>(x / 8)] |= static_cast<std::uint8_t>(0x80 >> (x % 8));
        }
        write_bytes(os, row.data(), row.size());
    }
}

BinaryImage load_pbm(const std::string& path) {
    auto is = open_input(path);
    std::string magic;
    is >> magic;
    if (magic != "P4") throw IoError("not a P4 PBM file: " + path);
    int w = 0, h = 0;
    is >> w >> h;
    is.get();  // single whitespace after header
    if (w <= 0 || h <= 0) throw IoError("bad PBM dimensions in " + path);
    BinaryImage image;
    image.width = w;
    image.height = h;
    image.bits.assign(static_cast<std::size_t>(w) * h, 0);
    const int row_bytes = (w + 7) / 8;
    std::vector<std::uint8_t> row(static_cast<std::size_t>(row_bytes));
    for (int y = 0; y < h; ++y) {
        read_bytes(is, row.data(), row.size());
        for (int x = 0; x < w; ++x) {
            if (row[static_cast<std::size_t>(x / 8)] & (0x80 >> (x % 8))) image.set(x, y);
        }
    }
    return image;
}

namespace {
constexpr char kContourMagic[] = "S2SCNTR";
constexpr std::uint32_t kContourVersion = 1;
} // namespace

void save_contour(const ContourSamples& samples, const std::string& path) {
    if (samples.points.size() != static_cast<std::size_t>(samples.M) + 2) {
        throw InvalidInput("contour list must have M+2 points");
    }
    auto os = open_output(path);
    write_magic(os, kContourMagic);
    write_le<std::uint32_t>(os, kContourVersion);
    write_le<std::uint8_t>(os, static_cast<std::uint8_t>(samples.view));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(samples.M));
    for (const auto& p : samples.points) {
        write_le<float>(os, static_cast<float>(p.x()));
        write_le<float>(os, static_cast<float>(p.y()));
    }
}

ContourSamples load_contour(const std::string& path) {
    auto is = open_input(path);
    expect_magic(is, kContourMagic);
    if (read_le<std::uint32_t>(is) != kContourVersion) throw IoError("unsupported contour container version");
    ContourSamples samples;
    samples.view = static_cast<View>(read_le<std::uint8_t>(is));
    samples.M = static_cast<int>(read_le<std::uint32_t>(is));
    samples.points.resize(static_cast<std::size_t>(samples.M) + 2);
    for (auto& p : samples.points) {
        const float x = read_le<float>(is);
        const float y = read_le<float>(is);
        p = Eigen::Vector2d(x, y);
    }
    return samples;
}

} // namespace s2s
