#pragma once

#include "s2s/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace s2s {

enum class View : std::uint8_t { front = 0, side = 1 };

/// Perspective camera for silhouette rendering. The nominal position sits
/// distance_m in front of the body's bounding-box center along the view
/// axis; a seeded Gaussian offset of jitter_std_m is added in the image
/// plane. With the default focal length a 2 m body at 3 m spans 90% of the
/// 600 px image height.
struct Camera {
    View view = View::front;
    int width = 500;
    int height = 600;
    double focal_px = 810.0;
    double distance_m = 3.0;
    double jitter_std_m = 0.05;

    void validate() const;
};

struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // row-major, one byte per pixel

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y) { bits[static_cast<std::size_t>(y) * width + x] = 1; }
    std::size_t count() const;
};

/// Closed outer boundary in image coordinates (pixel centers, y down).
struct Boundary {
    std::vector<Eigen::Vector2d> points;
    bool multiple_components = false;

    std::size_t size() const { return points.size(); }
};

/// Ordered contour samples in unit-body-height coordinates: M interior
/// points in anti-clockwise order, centroid at the origin, plus a copy of
/// the ending point at the front and a copy of the starting point at the
/// end (size M+2).
struct ContourSamples {
    View view = View::front;
    int M = 0;
    std::vector<Eigen::Vector2d> points;

    double signed_area() const;            // of the M interior points
    Eigen::Vector2d interior_centroid() const;
};

/// Rasterizes the mesh into a binary occupancy image: a pixel is set iff
/// its center is covered by a projected triangle. Throws RenderError when
/// the body misses the frame entirely.
BinaryImage render_silhouette(const Mesh& mesh, const Camera& camera, std::uint64_t seed);

/// Outer border of the (largest) 4-connected foreground component as a
/// closed 8-connected pixel chain; holes are ignored. Throws RenderError on
/// an empty image; sets multiple_components when blobs were discarded.
Boundary extract_contour(const BinaryImage& image);

/// Vertical pixel extent of the boundary, the normalizer for contours.
double boundary_height_px(const Boundary& boundary);

/// Uniform arc-length resampling of a closed boundary into M ordered
/// points, starting from the highest point (ties broken toward the
/// horizontal bounding-box center), anti-clockwise, scaled to unit body
/// height and centered on the interior centroid.
ContourSamples resample_contour(const Boundary& boundary, int M, double body_height_px,
                                View view = View::front);

/// Input tensor layout helper: channel 0 = x, channel 1 = y, length M+2.
std::vector<float> contour_to_channels(const ContourSamples& samples);

// PBM (P4) export for visual inspection.
void save_pbm(const BinaryImage& image, const std::string& path);
BinaryImage load_pbm(const std::string& path);

// Binary container ("S2SCNTR"): 8-byte magic, u32 version, u8 view, u32 M,
// then (M+2) little-endian f32 (x, y) pairs.
void save_contour(const ContourSamples& samples, const std::string& path);
ContourSamples load_contour(const std::string& path);

} // namespace s2s
