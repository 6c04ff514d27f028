#pragma once

#include <array>
#include <cstdio>
#include <string>

#include "qdlearn/io_util.hpp"
#include "qdlearn/lindblad.hpp"

namespace qdlearn {

// Trajectory container, version 1, little-endian:
//   magic "QDLTRJ\0\0" | u32 version | u32 n_sites | u64 n_times
//   u64 config digest | point (j, lambda, gamma, T as f64)
//   times f64[n_times] | per time: row-major n*n complex128 (re, im)
//   u64 FNV-1a checksum of everything above
inline constexpr std::array<char, 8> kTrajectoryMagic = {'Q', 'D', 'L', 'T', 'R', 'J', 0, 0};
inline constexpr std::uint32_t kTrajectoryVersion = 1;

inline void write_trajectory(const std::string& path, const Trajectory& traj,
                             std::uint64_t config_digest) {
    const int n = static_cast<int>(traj.states.empty() ? 0 : traj.states.front().rows());
    if (traj.states.size() != traj.grid.size())
        throw std::invalid_argument("write_trajectory: state count != grid length");
    BinaryWriter w;
    w.put(kTrajectoryMagic);
    w.put(kTrajectoryVersion);
    w.put(static_cast<std::uint32_t>(n));
    w.put(static_cast<std::uint64_t>(traj.grid.size()));
    w.put(config_digest);
    w.put(static_cast<double>(traj.point.site_label));
    w.put(traj.point.lambda_cm1);
    w.put(traj.point.gamma_cm1);
    w.put(traj.point.temperature_k);
    w.put_array(traj.grid.times_fs.data(), traj.grid.size());
    for (const auto& rho : traj.states)
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                w.put(rho(r, c).real());
                w.put(rho(r, c).imag());
            }
    w.save(path);
}

inline Trajectory read_trajectory(const std::string& path, std::uint64_t* config_digest = nullptr) {
    BinaryReader r(path);
    r.verify_trailer();
    if (r.get<std::array<char, 8>>() != kTrajectoryMagic)
        throw std::runtime_error("not a trajectory file: " + path);
    if (r.get<std::uint32_t>() != kTrajectoryVersion)
        throw std::runtime_error("unsupported trajectory version in " + path);
    const auto n = static_cast<int>(r.get<std::uint32_t>());
    const auto n_times = r.get<std::uint64_t>();
    const auto digest = r.get<std::uint64_t>();
    if (config_digest) *config_digest = digest;

    Trajectory traj;
    traj.point.site_label = static_cast<int>(r.get<double>());
    traj.point.lambda_cm1 = r.get<double>();
    traj.point.gamma_cm1 = r.get<double>();
    traj.point.temperature_k = r.get<double>();
    traj.grid.times_fs.resize(n_times);
    r.get_array(traj.grid.times_fs.data(), n_times);
    traj.states.reserve(n_times);
    for (std::uint64_t i = 0; i < n_times; ++i) {
        Eigen::MatrixXcd rho(n, n);
        for (int row = 0; row < n; ++row)
            for (int col = 0; col < n; ++col) {
                const double re = r.get<double>();
                const double im = r.get<double>();
                rho(row, col) = complexd(re, im);
            }
        traj.states.push_back(std::move(rho));
    }
    if (r.remaining() != 0) throw std::runtime_error("trailing bytes in " + path);
    return traj;
}

// Cheap integrity probe used by resumable generation: true iff the file
// exists, its trailer checksum matches and the header describes `expected`.
inline bool trajectory_file_valid(const std::string& path, const SimulationPoint& expected,
                                  const TimeGrid& grid, int n_sites,
                                  std::uint64_t config_digest) {
    try {
        std::uint64_t digest = 0;
        const Trajectory traj = read_trajectory(path, &digest);
        return digest == config_digest && traj.grid.times_fs == grid.times_fs &&
               static_cast<int>(traj.states.size()) == static_cast<int>(grid.size()) &&
               (traj.states.empty() || traj.states.front().rows() == n_sites) &&
               traj.point.site_label == expected.site_label &&
               traj.point.lambda_cm1 == expected.lambda_cm1 &&
               traj.point.gamma_cm1 == expected.gamma_cm1 &&
               traj.point.temperature_k == expected.temperature_k;
    } catch (const std::exception&) {
        return false;
    }
}

// CSV: one row per time; t_fs, then the upper triangle row by row with the
// diagonal as a single real column and each off-diagonal as re,im. Shared by
// reference and predicted trajectories so plots overlay directly.
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    const int n = static_cast<int>(traj.states.empty() ? 0 : traj.states.front().rows());
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fputs("t_fs", f);
    for (int r = 0; r < n; ++r) {
        std::fprintf(f, ",rho_%d_%d", r + 1, r + 1);
        for (int c = r + 1; c < n; ++c)
            std::fprintf(f, ",rho_%d_%d_re,rho_%d_%d_im", r + 1, c + 1, r + 1, c + 1);
    }
    std::fputc('\n', f);
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        std::fprintf(f, "%.6f", traj.grid.times_fs[i]);
        const auto& rho = traj.states[i];
        for (int r = 0; r < n; ++r) {
            std::fprintf(f, ",%.12g", rho(r, r).real());
            for (int c = r + 1; c < n; ++c)
                std::fprintf(f, ",%.12g,%.12g", rho(r, c).real(), rho(r, c).imag());
        }
        std::fputc('\n', f);
    }
    if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
}

}  // namespace qdlearn
