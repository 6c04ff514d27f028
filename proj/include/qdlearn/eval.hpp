#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdlearn/dataset.hpp"
#include "qdlearn/flatten.hpp"
#include "qdlearn/model_io.hpp"

namespace qdlearn {

// One forward pass, then Hermitian reconstruction of every sampled density
// matrix. The network is invoked once regardless of how many time steps the
// trajectory has.
inline Trajectory predict(SurrogateModel& model, const SimulationPoint& point) {
    validate(point);
    Eigen::MatrixXd x(1, 4);
    x << static_cast<double>(point.site_label), point.lambda_cm1 / model.lambda_max,
        point.gamma_cm1 / model.gamma_max, point.temperature_k / model.temperature_max;
    const Eigen::MatrixXd y = model.net.forward(x, false);
    const std::size_t n_times = model.times_fs.size();
    if (static_cast<std::size_t>(y.cols()) != flat_width(model.n_sites) * n_times)
        throw std::runtime_error("predict: model output length does not match grid");
    Trajectory traj;
    traj.point = point;
    traj.grid.times_fs = model.times_fs;
    traj.states =
        unflatten(std::span<const double>(y.data(), static_cast<std::size_t>(y.cols())),
                  model.n_sites, n_times);
    return traj;
}

// Pooled MAE/RMSE per element category. Every (trajectory, time, element)
// sample counts once; population diagonals, off-diagonal real parts and
// off-diagonal imaginary parts are pooled separately.
struct ErrorReport {
    double mae_diagonal = 0.0, rmse_diagonal = 0.0;
    double mae_offdiag_real = 0.0, rmse_offdiag_real = 0.0;
    double mae_offdiag_imag = 0.0, rmse_offdiag_imag = 0.0;
    std::size_t n_trajectories = 0;
};

inline ErrorReport error_report(const std::vector<std::vector<double>>& predictions,
                                const std::vector<std::vector<double>>& references,
                                int n_sites) {
    if (predictions.size() != references.size())
        throw std::invalid_argument("error_report: trajectory count mismatch");
    if (predictions.empty()) throw std::invalid_argument("error_report: no trajectories");
    const auto kinds = element_kinds(n_sites);
    const std::size_t width = kinds.size();
    // Per-trajectory partial sums, reduced in sorted order so the report is
    // exactly invariant under trajectory permutation.
    std::array<std::vector<double>, 3> abs_parts, sq_parts;
    std::size_t count[3] = {0, 0, 0};
    for (std::size_t k = 0; k < predictions.size(); ++k) {
        const auto& p = predictions[k];
        const auto& r = references[k];
        if (p.size() != r.size() || p.size() % width != 0)
            throw std::invalid_argument("error_report: flat vector shape mismatch");
        double abs_traj[3] = {0, 0, 0}, sq_traj[3] = {0, 0, 0};
        for (std::size_t i = 0; i < p.size(); ++i) {
            const auto cat = static_cast<std::size_t>(kinds[i % width]);
            const double d = p[i] - r[i];
            abs_traj[cat] += std::abs(d);
            sq_traj[cat] += d * d;
            ++count[cat];
        }
        for (std::size_t cat = 0; cat < 3; ++cat) {
            abs_parts[cat].push_back(abs_traj[cat]);
            sq_parts[cat].push_back(sq_traj[cat]);
        }
    }
    double abs_sum[3], sq_sum[3];
    for (std::size_t cat = 0; cat < 3; ++cat) {
        std::sort(abs_parts[cat].begin(), abs_parts[cat].end());
        std::sort(sq_parts[cat].begin(), sq_parts[cat].end());
        abs_sum[cat] = std::accumulate(abs_parts[cat].begin(), abs_parts[cat].end(), 0.0);
        sq_sum[cat] = std::accumulate(sq_parts[cat].begin(), sq_parts[cat].end(), 0.0);
    }
    ErrorReport rep;
    rep.n_trajectories = predictions.size();
    auto mae = [&](ElementKind k) {
        const auto c = static_cast<std::size_t>(k);
        return count[c] ? abs_sum[c] / static_cast<double>(count[c]) : 0.0;
    };
    auto rmse = [&](ElementKind k) {
        const auto c = static_cast<std::size_t>(k);
        return count[c] ? std::sqrt(sq_sum[c] / static_cast<double>(count[c])) : 0.0;
    };
    rep.mae_diagonal = mae(ElementKind::diagonal);
    rep.rmse_diagonal = rmse(ElementKind::diagonal);
    rep.mae_offdiag_real = mae(ElementKind::offdiag_real);
    rep.rmse_offdiag_real = rmse(ElementKind::offdiag_real);
    rep.mae_offdiag_imag = mae(ElementKind::offdiag_imag);
    rep.rmse_offdiag_imag = rmse(ElementKind::offdiag_imag);
    return rep;
}

struct LatencyStats {
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
    int repetitions = 0;
};

// Wall-clock forward + unflatten per trajectory on the calling thread.
// Warmup iterations are excluded from the statistics.
inline LatencyStats latency_benchmark(SurrogateModel& model,
                                      const std::vector<SimulationPoint>& points,
                                      int repetitions, int warmup = 3) {
    if (repetitions < 1) throw std::invalid_argument("latency_benchmark: repetitions must be >= 1");
    if (points.empty()) throw std::invalid_argument("latency_benchmark: no points");
    using clock = std::chrono::steady_clock;
    volatile double sink = 0.0;  // keep the prediction from being optimized out
    for (int i = 0; i < warmup; ++i)
        sink = predict(model, points[static_cast<std::size_t>(i) % points.size()])
                   .states.back()(0, 0)
                   .real();
    std::vector<double> ms(static_cast<std::size_t>(repetitions));
    for (int i = 0; i < repetitions; ++i) {
        const auto t0 = clock::now();
        const Trajectory traj = predict(model, points[static_cast<std::size_t>(i) % points.size()]);
        const auto t1 = clock::now();
        sink = traj.states.back()(0, 0).real();
        ms[static_cast<std::size_t>(i)] =
            std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    (void)sink;
    std::sort(ms.begin(), ms.end());
    LatencyStats stats;
    stats.repetitions = repetitions;
    const std::size_t n = ms.size();
    stats.median_ms = n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
    stats.p95_ms = ms[std::min(n - 1, static_cast<std::size_t>(std::ceil(0.95 * n)) - 1)];
    stats.min_ms = ms.front();
    stats.max_ms = ms.back();
    return stats;
}

// Per-step physical-consistency diagnostics. Predictions are reported raw;
// nothing is renormalized.
struct PhysicalityReport {
    std::vector<double> trace_deviation;
    std::vector<double> min_eig;
    std::vector<double> hermiticity;
    std::vector<std::size_t> flagged_steps;
    double max_trace_deviation = 0.0;
    double worst_min_eig = 0.0;
    double max_hermiticity = 0.0;
};

inline PhysicalityReport physicality_report(const Trajectory& traj, double trace_tol = 1e-2,
                                            double eig_tol = -1e-2) {
    PhysicalityReport rep;
    rep.worst_min_eig = 1.0;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto& rho = traj.states[i];
        const double tdev = trace_deviation(rho);
        const double eig = min_eigenvalue(rho);
        const double herm = hermiticity_residual(rho);
        rep.trace_deviation.push_back(tdev);
        rep.min_eig.push_back(eig);
        rep.hermiticity.push_back(herm);
        rep.max_trace_deviation = std::max(rep.max_trace_deviation, tdev);
        rep.worst_min_eig = std::min(rep.worst_min_eig, eig);
        rep.max_hermiticity = std::max(rep.max_hermiticity, herm);
        if (tdev > trace_tol || eig < eig_tol) rep.flagged_steps.push_back(i);
    }
    return rep;
}

// Test-split errors partitioned by position relative to the per-site
// axis-aligned bounding box of the training inputs in normalized
// (lambda, gamma, T) space: interpolation inside, extrapolation outside.
struct PartitionedReport {
    std::optional<ErrorReport> interior;
    std::optional<ErrorReport> exterior;
};

inline PartitionedReport interpolation_split_eval(SurrogateModel& model, const Dataset& ds) {
    struct Box {
        double lo[3], hi[3];
        bool any = false;
    };
    std::map<int, Box> boxes;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.split[i] != Split::train) continue;
        auto& box = boxes[ds.points[i].site_label];
        for (int d = 0; d < 3; ++d) {
            const double v = ds.inputs[i].v[d + 1];
            if (!box.any) {
                box.lo[d] = box.hi[d] = v;
            } else {
                box.lo[d] = std::min(box.lo[d], v);
                box.hi[d] = std::max(box.hi[d], v);
            }
        }
        box.any = true;
    }

    std::vector<std::vector<double>> pred_in, ref_in, pred_out, ref_out;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.split[i] != Split::test) continue;
        const auto it = boxes.find(ds.points[i].site_label);
        bool interior = it != boxes.end() && it->second.any;
        if (interior)
            for (int d = 0; d < 3; ++d) {
                const double v = ds.inputs[i].v[d + 1];
                if (v < it->second.lo[d] || v > it->second.hi[d]) interior = false;
            }
        const Trajectory traj = predict(model, ds.points[i]);
        auto& preds = interior ? pred_in : pred_out;
        auto& refs = interior ? ref_in : ref_out;
        preds.push_back(flatten(traj));
        refs.push_back(ds.targets[i]);
    }
    PartitionedReport rep;
    if (!pred_in.empty()) rep.interior = error_report(pred_in, ref_in, ds.n_sites);
    if (!pred_out.empty()) rep.exterior = error_report(pred_out, ref_out, ds.n_sites);
    return rep;
}

inline void write_error_report_text(const std::string& path, const ErrorReport& rep) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "n_trajectories = %zu\n", rep.n_trajectories);
    std::fprintf(f, "mae_diagonal = %.12e\n", rep.mae_diagonal);
    std::fprintf(f, "rmse_diagonal = %.12e\n", rep.rmse_diagonal);
    std::fprintf(f, "mae_offdiag_real = %.12e\n", rep.mae_offdiag_real);
    std::fprintf(f, "rmse_offdiag_real = %.12e\n", rep.rmse_offdiag_real);
    std::fprintf(f, "mae_offdiag_imag = %.12e\n", rep.mae_offdiag_imag);
    std::fprintf(f, "rmse_offdiag_imag = %.12e\n", rep.rmse_offdiag_imag);
    if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
}

inline void write_error_report_csv(const std::string& path, const ErrorReport& rep) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fputs(
        "n_trajectories,mae_diagonal,rmse_diagonal,mae_offdiag_real,rmse_offdiag_real,"
        "mae_offdiag_imag,rmse_offdiag_imag\n",
        f);
    std::fprintf(f, "%zu,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n", rep.n_trajectories,
                 rep.mae_diagonal, rep.rmse_diagonal, rep.mae_offdiag_real, rep.rmse_offdiag_real,
                 rep.mae_offdiag_imag, rep.rmse_offdiag_imag);
    if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
}

}  // namespace qdlearn
