#include "s2s/metrics.hpp"

#include "s2s/error.hpp"
#include "s2s/io_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace s2s {

void FeatureCurve::validate(const Mesh& mesh) const {
    if (anchors.size() < 3) throw InvalidInput("feature curve needs at least 3 anchors");
    for (const auto& anchor : anchors) {
        if (anchor.triangle < 0 ||
            anchor.triangle >= static_cast<std::int32_t>(mesh.triangles.size())) {
            throw InvalidInput("feature-curve anchor triangle out of range");
        }
        double sum = 0.0;
        for (double b : anchor.bary) {
            if (b < 0.0) throw InvalidInput("negative barycentric coordinate");
            sum += b;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("barycentric coordinates must sum to 1");
    }
}

namespace {

void check_pair(const Mesh& truth, const Mesh& pred) {
    if (!truth.same_connectivity(pred)) throw InvalidInput("meshes have different connectivity");
    if (truth.vertex_count() == 0) throw InvalidInput("empty mesh");
}

} // namespace

double e_max(const Mesh& truth, const Mesh& pred) {
    check_pair(truth, pred);
    return (truth.vertices - pred.vertices).colwise().norm().maxCoeff();
}

double e_aver(const Mesh& truth, const Mesh& pred) {
    check_pair(truth, pred);
    return (truth.vertices - pred.vertices).colwise().norm().mean();
}

ErrorSummary summarize(const std::vector<double>& per_sample_e_max,
                       const std::vector<double>& per_sample_e_aver) {
    if (per_sample_e_max.empty() || per_sample_e_max.size() != per_sample_e_aver.size()) {
        throw InvalidInput("summarize needs equal-length, non-empty error lists");
    }
    ErrorSummary s;
    s.per_sample_e_max = per_sample_e_max;
    s.per_sample_e_aver = per_sample_e_aver;
    s.sample_count = static_cast<int>(per_sample_e_max.size());
    s.mean_e_max = std::accumulate(per_sample_e_max.begin(), per_sample_e_max.end(), 0.0) /
                   static_cast<double>(s.sample_count);
    s.mean_e_aver = std::accumulate(per_sample_e_aver.begin(), per_sample_e_aver.end(), 0.0) /
                    static_cast<double>(s.sample_count);
    return s;
}

GirthErrorStats girth_error_stats(const std::string& curve,
                                  const std::vector<double>& truth_girths,
                                  const std::vector<double>& pred_girths) {
    if (truth_girths.empty() || truth_girths.size() != pred_girths.size()) {
        throw InvalidInput("girth lists must be equal-length and non-empty");
    }
    const auto n = static_cast<double>(truth_girths.size());
    GirthErrorStats stats;
    stats.curve = curve;
    std::vector<double> abs_errors(truth_girths.size());
    for (std::size_t i = 0; i < truth_girths.size(); ++i) {
        abs_errors[i] = std::abs(truth_girths[i] - pred_girths[i]);
    }
    stats.mean_abs_error = std::accumulate(abs_errors.begin(), abs_errors.end(), 0.0) / n;
    double sq = 0.0;
    for (double e : abs_errors) sq += (e - stats.mean_abs_error) * (e - stats.mean_abs_error);
    stats.stddev_abs_error = std::sqrt(sq / n);
    return stats;
}

double girth(const Mesh& mesh, const FeatureCurve& curve) {
    curve.validate(mesh);
    std::vector<Eigen::Vector3d> loop;
    loop.reserve(curve.anchors.size());
    for (const auto& anchor : curve.anchors) {
        const auto& tri = mesh.triangles[static_cast<std::size_t>(anchor.triangle)];
        Eigen::Vector3d p = Eigen::Vector3d::Zero();
        for (int c = 0; c < 3; ++c) {
            p += anchor.bary[static_cast<std::size_t>(c)] *
                 mesh.vertices.col(tri[static_cast<std::size_t>(c)]);
        }
        loop.push_back(p);
    }
    double length = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        length += (loop[(i + 1) % loop.size()] - loop[i]).norm();
    }
    return length;
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins) {
    if (values.empty()) throw InvalidInput("histogram of empty list");
    if (bins < 1) throw InvalidInput("histogram needs at least one bin");
    const double max_value = *std::max_element(values.begin(), values.end());
    const double width = max_value > 0.0 ? max_value / bins : 1.0;
    std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) {
        out[static_cast<std::size_t>(b)] = {b * width, (b + 1) * width, 0};
    }
    for (double v : values) {
        int b = std::min(static_cast<int>(v / width), bins - 1);
        b = std::max(b, 0);
        ++out[static_cast<std::size_t>(b)].count;
    }
    return out;
}

std::vector<std::pair<double, double>> empirical_cdf(const std::vector<double>& values) {
    if (values.empty()) throw InvalidInput("cdf of empty list");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> cdf;
    cdf.reserve(sorted.size());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
    }
    return cdf;
}

void save_histogram_csv(const std::vector<HistogramBin>& bins, const std::string& path) {
    auto os = open_output(path, std::ios::out);
    os << "bin_lower,bin_upper,count\n";
    for (const auto& bin : bins) {
        os << bin.lower << ',' << bin.upper << ',' << bin.count << '\n';
    }
}

void save_cdf_csv(const std::vector<std::pair<double, double>>& cdf, const std::string& path) {
    auto os = open_output(path, std::ios::out);
    os << "value,cumulative_fraction\n";
    for (const auto& [value, fraction] : cdf) {
        os << value << ',' << fraction << '\n';
    }
}

void save_summary_json(const ErrorSummary& summary, const std::string& path) {
    nlohmann::json j;
    j["sample_count"] = summary.sample_count;
    j["mean_e_max"] = summary.mean_e_max;
    j["mean_e_aver"] = summary.mean_e_aver;
    j["per_sample_e_max"] = summary.per_sample_e_max;
    j["per_sample_e_aver"] = summary.per_sample_e_aver;
    nlohmann::json girths = nlohmann::json::array();
    for (const auto& g : summary.girth_errors) {
        girths.push_back({{"curve", g.curve},
                          {"mean_abs_error", g.mean_abs_error},
                          {"stddev_abs_error", g.stddev_abs_error}});
    }
    j["girth_errors"] = std::move(girths);
    auto os = open_output(path, std::ios::out);
    os << j.dump(2) << '\n';
}

void save_summary_csv(const ErrorSummary& summary, const std::string& path) {
    auto os = open_output(path, std::ios::out);
    os << "sample,e_max,e_aver\n";
    for (int i = 0; i < summary.sample_count; ++i) {
        os << i << ',' << summary.per_sample_e_max[static_cast<std::size_t>(i)] << ','
           << summary.per_sample_e_aver[static_cast<std::size_t>(i)] << '\n';
    }
}

} // namespace s2s
