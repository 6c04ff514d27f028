#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdlearn/io_util.hpp"
#include "qdlearn/system.hpp"

namespace qdlearn {

// Network input [j, lambda/lambda_max, gamma/gamma_max, T/T_max]. A distinct
// type from SimulationPoint so normalization cannot be applied twice.
struct NormalizedInput {
    std::array<double, 4> v{};
};

inline NormalizedInput normalize_input(const SimulationPoint& p, const ParameterGrid& grid) {
    validate(grid);
    return {{static_cast<double>(p.site_label), p.lambda_cm1 / grid.lambda_max(),
             p.gamma_cm1 / grid.gamma_max(), p.temperature_k / grid.temperature_max()}};
}

// Distances for selection live in the normalized (lambda, gamma, T) cube;
// the excitation label is excluded (selection runs per label).
inline double selection_distance(const NormalizedInput& a, const NormalizedInput& b) {
    const double d1 = a.v[1] - b.v[1], d2 = a.v[2] - b.v[2], d3 = a.v[3] - b.v[3];
    return std::sqrt(d1 * d1 + d2 * d2 + d3 * d3);
}

// Greedy max-min selection: start from seed_index, then repeatedly take the
// candidate whose distance to the selected set is largest, ties to the lowest
// index. min_distance_trace, when given, records the max-min distance at each
// pick (non-increasing by construction).
inline std::vector<std::size_t> farthest_point_sampling(
    const std::vector<NormalizedInput>& candidates, std::size_t k, std::size_t seed_index,
    std::vector<double>* min_distance_trace = nullptr) {
    if (k > candidates.size())
        throw std::invalid_argument("farthest_point_sampling: k exceeds candidate count");
    if (seed_index >= candidates.size())
        throw std::invalid_argument("farthest_point_sampling: seed index out of range");
    std::vector<std::size_t> selected;
    if (k == 0) return selected;
    selected.reserve(k);
    selected.push_back(seed_index);
    if (min_distance_trace) min_distance_trace->clear();

    std::vector<double> min_dist(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        min_dist[i] = selection_distance(candidates[i], candidates[seed_index]);

    while (selected.size() < k) {
        std::size_t best = 0;
        double best_dist = -1.0;
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (min_dist[i] > best_dist) {
                best_dist = min_dist[i];
                best = i;
            }
        if (min_distance_trace) min_distance_trace->push_back(best_dist);
        selected.push_back(best);
        for (std::size_t i = 0; i < candidates.size(); ++i)
            min_dist[i] = std::min(min_dist[i], selection_distance(candidates[i], candidates[best]));
    }
    return selected;
}

// Deterministic seeding rule: the candidate closest to the centroid of the
// normalized coordinates, ties to the lowest index.
inline std::size_t centroid_seed_index(const std::vector<NormalizedInput>& candidates) {
    if (candidates.empty())
        throw std::invalid_argument("centroid_seed_index: no candidates");
    NormalizedInput centroid{};
    for (const auto& c : candidates)
        for (int d = 1; d < 4; ++d) centroid.v[d] += c.v[d];
    for (int d = 1; d < 4; ++d) centroid.v[d] /= static_cast<double>(candidates.size());
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double d = selection_distance(candidates[i], centroid);
        if (d < best_dist) {
            best_dist = d;
            best = i;
        }
    }
    return best;
}

enum class Split : std::uint8_t { train = 0, validation = 1, test = 2 };

// Supervised data set: one record per trajectory. Targets are the flattened
// time-major vectors; inputs the normalized parameter quadruples.
struct Dataset {
    int n_sites = 0;
    std::vector<double> times_fs;
    double lambda_max = 0.0, gamma_max = 0.0, temperature_max = 0.0;
    std::vector<SimulationPoint> points;
    std::vector<NormalizedInput> inputs;
    std::vector<std::vector<double>> targets;
    std::vector<Split> split;

    std::size_t size() const { return points.size(); }
    std::size_t target_length() const { return targets.empty() ? 0 : targets.front().size(); }
    std::vector<std::size_t> indices_of(Split s) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i] == s) out.push_back(i);
        return out;
    }
};

// Per excitation label: FPS picks train_per_site points into train (seeded at
// the centroid-closest candidate), a second FPS pass over the remainder picks
// val_per_site into validation, everything else is test.
inline void assign_splits(Dataset& ds, std::size_t train_per_site, std::size_t val_per_site) {
    ds.split.assign(ds.size(), Split::test);
    std::vector<int> labels;
    for (const auto& p : ds.points)
        if (std::find(labels.begin(), labels.end(), p.site_label) == labels.end())
            labels.push_back(p.site_label);

    for (int label : labels) {
        std::vector<std::size_t> pool;  // dataset indices with this label
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.points[i].site_label == label) pool.push_back(i);
        if (train_per_site + val_per_site > pool.size())
            throw std::invalid_argument("assign_splits: requested " +
                                        std::to_string(train_per_site + val_per_site) +
                                        " points for site label " + std::to_string(label) +
                                        " but only " + std::to_string(pool.size()) + " exist");

        std::vector<NormalizedInput> cand;
        cand.reserve(pool.size());
        for (auto i : pool) cand.push_back(ds.inputs[i]);
        for (auto sel : farthest_point_sampling(cand, train_per_site, centroid_seed_index(cand)))
            ds.split[pool[sel]] = Split::train;

        std::vector<std::size_t> rest;
        for (auto i : pool)
            if (ds.split[i] != Split::train) rest.push_back(i);
        if (rest.empty()) continue;
        std::vector<NormalizedInput> rest_cand;
        rest_cand.reserve(rest.size());
        for (auto i : rest) rest_cand.push_back(ds.inputs[i]);
        for (auto sel :
             farthest_point_sampling(rest_cand, val_per_site, centroid_seed_index(rest_cand)))
            ds.split[rest[sel]] = Split::validation;
    }
}

// Dataset container, version 1, little-endian:
//   magic "QDLDST\0\0" | u32 version | u32 n_sites | u64 n_times
//   u32 feature_len (4) | u64 target_len | u64 n_records | u64 config digest
//   lambda_max gamma_max T_max (f64) | times f64[n_times]
//   per record: raw point 4xf64 | normalized input 4xf64 | target f64[target_len] | split u8
//   u64 FNV-1a checksum
inline constexpr std::array<char, 8> kDatasetMagic = {'Q', 'D', 'L', 'D', 'S', 'T', 0, 0};
inline constexpr std::uint32_t kDatasetVersion = 1;

inline void write_dataset(const std::string& path, const Dataset& ds,
                          std::uint64_t config_digest) {
    if (ds.inputs.size() != ds.size() || ds.targets.size() != ds.size() ||
        ds.split.size() != ds.size())
        throw std::invalid_argument("write_dataset: ragged dataset");
    BinaryWriter w;
    w.put(kDatasetMagic);
    w.put(kDatasetVersion);
    w.put(static_cast<std::uint32_t>(ds.n_sites));
    w.put(static_cast<std::uint64_t>(ds.times_fs.size()));
    w.put(static_cast<std::uint32_t>(4));
    w.put(static_cast<std::uint64_t>(ds.target_length()));
    w.put(static_cast<std::uint64_t>(ds.size()));
    w.put(config_digest);
    w.put(ds.lambda_max);
    w.put(ds.gamma_max);
    w.put(ds.temperature_max);
    w.put_array(ds.times_fs.data(), ds.times_fs.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& p = ds.points[i];
        w.put(static_cast<double>(p.site_label));
        w.put(p.lambda_cm1);
        w.put(p.gamma_cm1);
        w.put(p.temperature_k);
        w.put_array(ds.inputs[i].v.data(), 4);
        if (ds.targets[i].size() != ds.target_length())
            throw std::invalid_argument("write_dataset: inconsistent target length");
        w.put_array(ds.targets[i].data(), ds.targets[i].size());
        w.put(static_cast<std::uint8_t>(ds.split[i]));
    }
    w.save(path);
}

inline Dataset read_dataset(const std::string& path, std::uint64_t* config_digest = nullptr) {
    BinaryReader r(path);
    r.verify_trailer();
    if (r.get<std::array<char, 8>>() != kDatasetMagic)
        throw std::runtime_error("not a dataset file: " + path);
    if (r.get<std::uint32_t>() != kDatasetVersion)
        throw std::runtime_error("unsupported dataset version in " + path);
    Dataset ds;
    ds.n_sites = static_cast<int>(r.get<std::uint32_t>());
    const auto n_times = r.get<std::uint64_t>();
    if (r.get<std::uint32_t>() != 4)
        throw std::runtime_error("unexpected feature length in " + path);
    const auto target_len = r.get<std::uint64_t>();
    const auto n_records = r.get<std::uint64_t>();
    const auto digest = r.get<std::uint64_t>();
    if (config_digest) *config_digest = digest;
    ds.lambda_max = r.get<double>();
    ds.gamma_max = r.get<double>();
    ds.temperature_max = r.get<double>();
    ds.times_fs.resize(n_times);
    r.get_array(ds.times_fs.data(), n_times);
    ds.points.resize(n_records);
    ds.inputs.resize(n_records);
    ds.targets.resize(n_records);
    ds.split.resize(n_records);
    for (std::uint64_t i = 0; i < n_records; ++i) {
        ds.points[i].site_label = static_cast<int>(r.get<double>());
        ds.points[i].lambda_cm1 = r.get<double>();
        ds.points[i].gamma_cm1 = r.get<double>();
        ds.points[i].temperature_k = r.get<double>();
        r.get_array(ds.inputs[i].v.data(), 4);
        ds.targets[i].resize(target_len);
        r.get_array(ds.targets[i].data(), target_len);
        const auto tag = r.get<std::uint8_t>();
        if (tag > 2) throw std::runtime_error("bad split tag in " + path);
        ds.split[i] = static_cast<Split>(tag);
    }
    if (r.remaining() != 0) throw std::runtime_error("trailing bytes in " + path);
    return ds;
}

}  // namespace qdlearn
