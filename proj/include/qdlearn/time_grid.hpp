#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qdlearn {

// Sample times in fs, strictly increasing, starting at 0.
struct TimeGrid {
    std::vector<double> times_fs;

    std::size_t size() const { return times_fs.size(); }
    double tmax_fs() const { return times_fs.back(); }
};

inline void validate(const TimeGrid& g) {
    if (g.times_fs.empty() || g.times_fs.front() != 0.0)
        throw std::invalid_argument("time grid must start at t = 0");
    for (std::size_t i = 1; i < g.times_fs.size(); ++i)
        if (!(g.times_fs[i] > g.times_fs[i - 1]))
            throw std::invalid_argument("time grid must be strictly increasing");
}

// Dual-rate sampling: 5 fs steps up to 2.5 ps, 25 fs steps beyond, so the
// early beating is resolved without blowing up the label length. tmax must
// land on the grid. tmax = 10000 gives the standard 801-point grid
// (501 fine + 300 coarse points), tmax = 1000 a 201-point grid.
inline TimeGrid dual_rate_time_grid(double tmax_fs) {
    constexpr double fine_dt = 5.0, coarse_dt = 25.0, crossover = 2500.0;
    if (!(tmax_fs >= fine_dt)) throw std::invalid_argument("tmax must be >= 5 fs");
    const double fine_end = std::min(tmax_fs, crossover);
    if (std::fmod(fine_end, fine_dt) != 0.0)
        throw std::invalid_argument("tmax must be a multiple of 5 fs");
    TimeGrid g;
    for (double t = 0.0; t <= fine_end; t += fine_dt) g.times_fs.push_back(t);
    if (tmax_fs > crossover) {
        if (std::fmod(tmax_fs - crossover, coarse_dt) != 0.0)
            throw std::invalid_argument("beyond 2.5 ps, tmax must be 2500 + k*25 fs");
        for (double t = crossover + coarse_dt; t <= tmax_fs; t += coarse_dt)
            g.times_fs.push_back(t);
    }
    return g;
}

inline TimeGrid default_time_grid() { return dual_rate_time_grid(10000.0); }

}  // namespace qdlearn
