#include "s2s/augment.hpp"

#include "s2s/error.hpp"
#include "s2s/io_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace s2s {

void CoeffDataset::validate() const {
    if (samples.size() != provenance.size()) {
        throw InvalidInput("coefficient dataset has mismatched provenance list");
    }
    const int dim = k();
    for (const auto& s : samples) {
        if (static_cast<int>(s.size()) != dim) throw InvalidInput("coefficient vectors differ in length");
    }
    for (const auto& p : provenance) {
        if (p.kind == Provenance::Kind::inserted) {
            const auto n = static_cast<std::int32_t>(samples.size());
            if (p.parent_a < 0 || p.parent_a >= n || p.parent_b < 0 || p.parent_b >= n) {
                throw InvalidInput("inserted sample references missing parent");
            }
        }
    }
}

namespace {

/// Indices of the K nearest other samples, ties broken by index.
std::vector<int> k_nearest(int sample_index, const std::vector<Eigen::VectorXd>& samples, int K) {
    std::vector<std::pair<double, int>> dist;
    dist.reserve(samples.size() - 1);
    const auto& own = samples[static_cast<std::size_t>(sample_index)];
    for (int j = 0; j < static_cast<int>(samples.size()); ++j) {
        if (j == sample_index) continue;
        dist.emplace_back((samples[static_cast<std::size_t>(j)] - own).norm(), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + K, dist.end());
    std::vector<int> out(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) out[static_cast<std::size_t>(j)] = dist[static_cast<std::size_t>(j)].second;
    return out;
}

} // namespace

double neighboring_radius(int sample_index, const CoeffDataset& dataset, int K) {
    if (K < 1) throw InvalidInput("K must be >= 1");
    if (dataset.size() <= static_cast<std::size_t>(K)) {
        throw InvalidInput("dataset must contain more than K samples");
    }
    if (sample_index < 0 || sample_index >= static_cast<int>(dataset.size())) {
        throw InvalidInput("sample index out of range");
    }
    const auto neighbors = k_nearest(sample_index, dataset.samples, K);
    double sum = 0.0;
    const auto& own = dataset.samples[static_cast<std::size_t>(sample_index)];
    for (int j : neighbors) sum += (dataset.samples[static_cast<std::size_t>(j)] - own).norm();
    return sum / K;
}

CoeffDataset refine(const CoeffDataset& dataset, const RefineParams& params) {
    RefineReport report;
    return refine(dataset, params, report);
}

CoeffDataset refine(const CoeffDataset& dataset, const RefineParams& params, RefineReport& report) {
    if (dataset.size() == 0) throw InvalidInput("refine on empty dataset");
    if (!(params.threshold_factor > 0.0)) throw InvalidInput("threshold_factor must be positive");
    if (params.inserts_per_pair < 1) throw InvalidInput("inserts_per_pair must be >= 1");
    if (params.K < 1) throw InvalidInput("K must be >= 1");
    dataset.validate();

    CoeffDataset out = dataset;
    report.inserted_per_iteration.clear();

    for (int iter = 0; iter < params.iterations; ++iter) {
        const int count = static_cast<int>(out.size());
        if (count <= params.K) break;  // neighborhoods undefined; nothing to do

        // Neighborhoods and r_min over the dataset as of iteration start.
        std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(count));
        double r_min = std::numeric_limits<double>::infinity();
        for (int i = 0; i < count; ++i) {
            neighbors[static_cast<std::size_t>(i)] = k_nearest(i, out.samples, params.K);
            double r = 0.0;
            for (int j : neighbors[static_cast<std::size_t>(i)]) {
                r += (out.samples[static_cast<std::size_t>(j)] - out.samples[static_cast<std::size_t>(i)]).norm();
            }
            r_min = std::min(r_min, r / params.K);
        }
        const double threshold = params.threshold_factor * r_min;

        // A pair is neighboring when either endpoint lists the other among
        // its K nearest; each unordered pair is processed once.
        std::set<std::pair<int, int>> pairs;
        for (int i = 0; i < count; ++i) {
            for (int j : neighbors[static_cast<std::size_t>(i)]) {
                pairs.emplace(std::min(i, j), std::max(i, j));
            }
        }

        // Canonical insertion order: (min index, max index, t).
        std::vector<std::tuple<int, int, double>> inserts;
        for (const auto& [a, b] : pairs) {
            const double gap =
                (out.samples[static_cast<std::size_t>(a)] - out.samples[static_cast<std::size_t>(b)]).norm();
            if (gap > threshold) {
                for (int j = 1; j <= params.inserts_per_pair; ++j) {
                    inserts.emplace_back(a, b, static_cast<double>(j) / (params.inserts_per_pair + 1));
                }
            }
        }

        int inserted = 0;
        for (const auto& [a, b, t] : inserts) {
            const Eigen::VectorXd point = (1.0 - t) * out.samples[static_cast<std::size_t>(a)] +
                                          t * out.samples[static_cast<std::size_t>(b)];
            bool duplicate = false;
            for (const auto& existing : out.samples) {
                if ((existing - point).lpNorm<Eigen::Infinity>() <= 1e-12) {
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) continue;
            out.samples.push_back(point);
            out.provenance.push_back({Provenance::Kind::inserted, a, b, t});
            ++inserted;
        }
        report.inserted_per_iteration.push_back(inserted);
    }
    return out;
}

namespace {
constexpr char kCoeffMagic[] = "S2SCOEF";
constexpr std::uint32_t kCoeffVersion = 1;
} // namespace

void save_coeffs_jsonl(const CoeffDataset& dataset, const std::string& path) {
    dataset.validate();
    auto os = open_output(path, std::ios::out);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        nlohmann::json j;
        j["values"] = std::vector<double>(dataset.samples[i].data(),
                                          dataset.samples[i].data() + dataset.samples[i].size());
        if (dataset.provenance[i].kind == Provenance::Kind::original) {
            j["origin"] = "original";
        } else {
            j["origin"] = "inserted";
            j["parent_a"] = dataset.provenance[i].parent_a;
            j["parent_b"] = dataset.provenance[i].parent_b;
            j["t"] = dataset.provenance[i].t;
        }
        os << j.dump() << '\n';
    }
}

CoeffDataset load_coeffs_jsonl(const std::string& path) {
    auto is = open_input(path, std::ios::in);
    CoeffDataset dataset;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        const auto values = j.at("values").get<std::vector<double>>();
        dataset.samples.push_back(Eigen::Map<const Eigen::VectorXd>(
            values.data(), static_cast<Eigen::Index>(values.size())));
        Provenance p;
        if (j.at("origin") == "inserted") {
            p.kind = Provenance::Kind::inserted;
            p.parent_a = j.at("parent_a").get<std::int32_t>();
            p.parent_b = j.at("parent_b").get<std::int32_t>();
            p.t = j.at("t").get<double>();
        }
        dataset.provenance.push_back(p);
    }
    dataset.validate();
    return dataset;
}

void save_coeffs_binary(const CoeffDataset& dataset, const std::string& path) {
    dataset.validate();
    auto os = open_output(path);
    write_magic(os, kCoeffMagic);
    write_le<std::uint32_t>(os, kCoeffVersion);
    write_le<std::uint64_t>(os, dataset.size());
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(dataset.k()));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& p = dataset.provenance[i];
        write_le<std::uint8_t>(os, p.kind == Provenance::Kind::inserted ? 1 : 0);
        if (p.kind == Provenance::Kind::inserted) {
            write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.parent_a));
            write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.parent_b));
            write_le<double>(os, p.t);
        }
        write_le_array(os, dataset.samples[i].data(), static_cast<std::size_t>(dataset.samples[i].size()));
    }
}

CoeffDataset load_coeffs_binary(const std::string& path) {
    auto is = open_input(path);
    expect_magic(is, kCoeffMagic);
    if (read_le<std::uint32_t>(is) != kCoeffVersion) throw IoError("unsupported coefficient container version");
    const auto count = read_le<std::uint64_t>(is);
    const auto k = read_le<std::uint32_t>(is);
    CoeffDataset dataset;
    dataset.samples.reserve(count);
    dataset.provenance.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Provenance p;
        if (read_le<std::uint8_t>(is) == 1) {
            p.kind = Provenance::Kind::inserted;
            p.parent_a = static_cast<std::int32_t>(read_le<std::uint32_t>(is));
            p.parent_b = static_cast<std::int32_t>(read_le<std::uint32_t>(is));
            p.t = read_le<double>(is);
        }
        Eigen::VectorXd values(k);
        read_le_array(is, values.data(), k);
        dataset.samples.push_back(std::move(values));
        dataset.provenance.push_back(p);
    }
    dataset.validate();
    return dataset;
}

} // namespace s2s
