#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace s2s {

/// Origin of one coefficient sample. Inserted samples record their parents
/// and the segment parameter, so the convex combination can be re-checked
/// bit-for-bit.
struct Provenance {
    enum class Kind { original, inserted };
    Kind kind = Kind::original;
    std::int32_t parent_a = -1;
    std::int32_t parent_b = -1;
    double t = 0.0;
};

struct CoeffDataset {
    std::vector<Eigen::VectorXd> samples;
    std::vector<Provenance> provenance;

    std::size_t size() const { return samples.size(); }
    int k() const { return samples.empty() ? 0 : static_cast<int>(samples.front().size()); }
    void validate() const;
};

/// Mean Euclidean distance from sample_index to its K nearest other
/// samples. Requires dataset.size() > K and K >= 1.
double neighboring_radius(int sample_index, const CoeffDataset& dataset, int K);

struct RefineParams {
    double threshold_factor = 1.8;
    int inserts_per_pair = 1;  // 1 = midpoint; 3 = three uniform interior points
    int iterations = 2;
    int K = 11;
};

/// Iterative densification: per iteration, r_min is recomputed over the
/// dataset as of iteration start; every unordered neighboring pair farther
/// apart than threshold_factor * r_min receives inserts_per_pair points at
/// t = j/(inserts_per_pair+1) on the segment. Inserted points duplicating
/// an existing sample within 1e-12 are dropped. Never removes samples.
CoeffDataset refine(const CoeffDataset& dataset, const RefineParams& params);

/// Number of samples inserted by the last refine() call, per iteration.
/// Populated as a side report for diagnostics.
struct RefineReport {
    std::vector<int> inserted_per_iteration;
};

CoeffDataset refine(const CoeffDataset& dataset, const RefineParams& params, RefineReport& report);

// JSON-lines persistence: one object per line with "values", "origin" and,
// for inserted samples, "parent_a"/"parent_b"/"t".
void save_coeffs_jsonl(const CoeffDataset& dataset, const std::string& path);
CoeffDataset load_coeffs_jsonl(const std::string& path);

// Binary container ("S2SCOEF"): 8-byte magic, u32 version, u64 count,
// u32 k, then per sample a provenance record (u8 kind, and for inserted
// u32 parent_a, u32 parent_b, f64 t) followed by k f64 values.
void save_coeffs_binary(const CoeffDataset& dataset, const std::string& path);
CoeffDataset load_coeffs_binary(const std::string& path);

} // namespace s2s
