#pragma once

#include "s2s/mesh.hpp"

#include <array>
#include <string>
#include <vector>

namespace s2s {

/// Closed measurement loop on the template, anchored by barycentric
/// coordinates so it transfers to any mesh with the same connectivity.
struct FeatureCurve {
    struct Anchor {
        std::int32_t triangle;
        std::array<double, 3> bary;  // non-negative, sums to 1
    };
    std::string name;  // "chest", "waist", "hip"
    std::vector<Anchor> anchors;

    void validate(const Mesh& mesh) const;
};

/// Max vertex-to-vertex distance between two meshes of equal connectivity.
double e_max(const Mesh& truth, const Mesh& pred);

/// Mean vertex-to-vertex distance.
double e_aver(const Mesh& truth, const Mesh& pred);

struct GirthErrorStats {
    std::string curve;
    double mean_abs_error = 0.0;
    double stddev_abs_error = 0.0;
};

/// Dataset-level error report.
struct ErrorSummary {
    std::vector<double> per_sample_e_max;
    std::vector<double> per_sample_e_aver;
    double mean_e_max = 0.0;
    double mean_e_aver = 0.0;
    std::vector<GirthErrorStats> girth_errors;
    int sample_count = 0;
};

/// Means over the per-sample error lists. Throws InvalidInput when empty.
ErrorSummary summarize(const std::vector<double>& per_sample_e_max,
                       const std::vector<double>& per_sample_e_aver);

/// Mean/stddev of absolute girth errors, appended to the summary.
GirthErrorStats girth_error_stats(const std::string& curve,
                                  const std::vector<double>& truth_girths,
                                  const std::vector<double>& pred_girths);

/// Length of the barycentric-interpolated closed polyline on the mesh.
double girth(const Mesh& mesh, const FeatureCurve& curve);

struct HistogramBin {
    double lower, upper;
    int count;
};

/// 40 uniform bins over [0, max(values)].
std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins = 40);

/// Empirical CDF as (value, fraction <= value) points, sorted ascending.
std::vector<std::pair<double, double>> empirical_cdf(const std::vector<double>& values);

/// CSV emitters for external plotting.
void save_histogram_csv(const std::vector<HistogramBin>& bins, const std::string& path);
void save_cdf_csv(const std::vector<std::pair<double, double>>& cdf, const std::string& path);
void save_summary_json(const ErrorSummary& summary, const std::string& path);
void save_summary_csv(const ErrorSummary& summary, const std::string& path);

} // namespace s2s
