// Command-line pipeline driver: generate reference trajectories, assemble
// supervised datasets, train the surrogate, predict, evaluate, benchmark.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <thread>

#include "qdlearn/dataset.hpp"
#include "qdlearn/eval.hpp"
#include "qdlearn/flatten.hpp"
#include "qdlearn/lindblad.hpp"
#include "qdlearn/manifest.hpp"
#include "qdlearn/model_io.hpp"
#include "qdlearn/system.hpp"
#include "qdlearn/train.hpp"
#include "qdlearn/trajectory_io.hpp"

namespace fs = std::filesystem;
using namespace qdlearn;

namespace {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string data_dir() {
    if (const char* env = std::getenv("QDLEARN_DATA_DIR")) return env;
    return "data";
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Canonical per-point file name, e.g. traj_j0_l10_g25_T30.bin.
std::string trajectory_filename(const SimulationPoint& p) {
    return "traj_j" + std::to_string(p.site_label) + "_l" + format_value(p.lambda_cm1) + "_g" +
           format_value(p.gamma_cm1) + "_T" + format_value(p.temperature_k) + ".bin";
}

ParameterGrid resolve_grid(const std::string& grid_file) {
    if (grid_file.empty()) return default_parameter_grid();
    return load_parameter_grid(grid_file);
}

void describe_grid(RunManifest& manifest, const ParameterGrid& grid, double tmax_fs) {
    auto join = [](const auto& values) {
        std::string s;
        for (const auto& v : values) {
            if (!s.empty()) s += ",";
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, int>)
                s += std::to_string(v);
            else
                s += format_value(v);
        }
        return s;
    };
    manifest.config("lambdas", join(grid.lambdas_cm1));
    manifest.config("gammas", join(grid.gammas_cm1));
    manifest.config("temperatures", join(grid.temperatures_k));
    manifest.config("sites", join(grid.site_labels));
    manifest.config("tmax_fs", tmax_fs);
}

int cmd_generate(const std::string& system_file, const std::string& grid_file,
                 const std::string& out_dir, double tmax_fs, int jobs) {
    const SystemSpec sys = load_system(system_file);
    const ParameterGrid grid = resolve_grid(grid_file);
    validate(grid);
    const TimeGrid tg = dual_rate_time_grid(tmax_fs);
    fs::create_directories(out_dir);

    RunManifest manifest("generate");
    manifest.config("system", sys.name);
    manifest.config("system_digest",
                    fnv1a64(sys.hamiltonian.data(),
                            sizeof(double) * static_cast<std::size_t>(sys.hamiltonian.size())));
    describe_grid(manifest, grid, tmax_fs);
    manifest.config("format_version", std::uint64_t{kTrajectoryVersion});
    const std::uint64_t digest = manifest.config_digest();

    const auto points = grid.points();
    std::atomic<std::size_t> next{0}, generated{0}, skipped{0};
    std::atomic<bool> failed{false}, numeric{false};
    std::mutex err_mutex;
    std::string first_error;

    auto record_failure = [&](const std::exception& e, bool is_numeric) {
        std::lock_guard lock(err_mutex);
        if (!failed.exchange(true)) {
            first_error = e.what();
            numeric = is_numeric;
        }
    };
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size() || failed.load()) return;
            const auto& pt = points[i];
            const std::string path = (fs::path(out_dir) / trajectory_filename(pt)).string();
            try {
                if (trajectory_file_valid(path, pt, tg, sys.n_sites, digest)) {
                    ++skipped;
                    continue;
                }
                const Trajectory traj = propagate(sys, pt, tg);
                write_trajectory(path, traj, digest);
                ++generated;
            } catch (const NumericError& e) {
                record_failure(e, true);
            } catch (const std::exception& e) {
                record_failure(e, false);
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::max(1, jobs);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed) {
        if (numeric) throw NumericError("generation failed: " + first_error);
        throw std::runtime_error("generation failed: " + first_error);
    }

    manifest.input(system_file);
    manifest.output(out_dir);
    manifest.note("trajectories", points.size());
    manifest.write((fs::path(out_dir) / "generate.manifest.json").string());
    std::printf("generated %zu, reused %zu (of %zu trajectories) -> %s\n", generated.load(),
                skipped.load(), points.size(), out_dir.c_str());
    return 0;
}

int cmd_build_dataset(const std::string& system_file, const std::string& grid_file,
                      const std::string& traj_dir, const std::string& out_file, double tmax_fs,
                      std::size_t train_per_site, std::size_t val_per_site) {
    const SystemSpec sys = load_system(system_file);
    const ParameterGrid grid = resolve_grid(grid_file);
    const TimeGrid tg = dual_rate_time_grid(tmax_fs);
    const auto points = grid.points();

    std::vector<std::string> missing;
    Dataset ds;
    ds.n_sites = sys.n_sites;
    ds.times_fs = tg.times_fs;
    ds.lambda_max = grid.lambda_max();
    ds.gamma_max = grid.gamma_max();
    ds.temperature_max = grid.temperature_max();
    for (const auto& pt : points) {
        const std::string path = (fs::path(traj_dir) / trajectory_filename(pt)).string();
        if (!fs::exists(path)) {
            missing.push_back(trajectory_filename(pt));
            continue;
        }
        if (missing.empty()) {
            const Trajectory traj = read_trajectory(path);
            if (traj.grid.times_fs != tg.times_fs)
                throw DataError("trajectory " + path + " was generated on a different time grid");
            ds.points.push_back(pt);
            ds.inputs.push_back(normalize_input(pt, grid));
            ds.targets.push_back(flatten(traj));
        }
    }
    if (!missing.empty()) {
        std::string msg = "missing " + std::to_string(missing.size()) + " trajectories:";
        for (std::size_t i = 0; i < missing.size() && i < 12; ++i) msg += "\n  " + missing[i];
        if (missing.size() > 12) msg += "\n  ...";
        throw DataError(msg);
    }
    assign_splits(ds, train_per_site, val_per_site);

    RunManifest manifest("build-dataset");
    manifest.config("system", sys.name);
    describe_grid(manifest, grid, tmax_fs);
    manifest.config("train_per_site", std::uint64_t{train_per_site});
    manifest.config("val_per_site", std::uint64_t{val_per_site});
    manifest.config("format_version", std::uint64_t{kDatasetVersion});
    write_dataset(out_file, ds, manifest.config_digest());
    manifest.input(traj_dir);
    manifest.output(out_file);
    manifest.write(out_file + ".manifest.json");

    const auto n_train = ds.indices_of(Split::train).size();
    const auto n_val = ds.indices_of(Split::validation).size();
    const auto n_test = ds.indices_of(Split::test).size();
    std::printf("train=%zu val=%zu test=%zu -> %s\n", n_train, n_val, n_test, out_file.c_str());
    return 0;
}

Eigen::MatrixXd gather_inputs(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd x(idx.size(), 4);
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (int c = 0; c < 4; ++c) x(static_cast<Eigen::Index>(r), c) = ds.inputs[idx[r]].v[c];
    return x;
}

Eigen::MatrixXd gather_targets(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd y(idx.size(), ds.target_length());
    for (std::size_t r = 0; r < idx.size(); ++r)
        y.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::VectorXd>(
            ds.targets[idx[r]].data(), static_cast<Eigen::Index>(ds.target_length()));
    return y;
}

int cmd_train(const std::string& dataset_file, const std::string& out_model, int max_epochs,
              double learning_rate, int batch_size, std::uint64_t seed,
              const std::string& history_file) {
    const Dataset ds = read_dataset(dataset_file);
    const auto train_idx = ds.indices_of(Split::train);
    const auto val_idx = ds.indices_of(Split::validation);
    if (train_idx.empty() || val_idx.empty())
        throw DataError("dataset has empty train or validation split");

    SurrogateModel model;
    model.net = default_architecture(ds.target_length());
    init_weights(model.net, seed);
    model.n_sites = ds.n_sites;
    model.times_fs = ds.times_fs;
    model.lambda_max = ds.lambda_max;
    model.gamma_max = ds.gamma_max;
    model.temperature_max = ds.temperature_max;

    TrainConfig cfg;
    cfg.learning_rate = learning_rate;
    cfg.batch_size = batch_size;
    cfg.max_epochs = max_epochs;
    cfg.rng_seed = seed;

    std::FILE* hist = nullptr;
    if (!history_file.empty()) {
        hist = std::fopen(history_file.c_str(), "w");
        if (!hist) throw std::runtime_error("cannot open for writing: " + history_file);
        std::fputs("epoch train_mse val_mse\n", hist);
    }
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult result = train(
        model.net, gather_inputs(ds, train_idx), gather_targets(ds, train_idx),
        gather_inputs(ds, val_idx), gather_targets(ds, val_idx), cfg,
        [&](const EpochStats& s) {
            if (hist) std::fprintf(hist, "%d %.12e %.12e\n", s.epoch, s.train_mse, s.val_mse);
            if (s.epoch % 100 == 0 || s.epoch == 1)
                std::printf("epoch %d  train %.3e  val %.3e\n", s.epoch, s.train_mse, s.val_mse);
        });
    if (hist && std::fclose(hist) != 0)
        throw std::runtime_error("write failed: " + history_file);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunManifest manifest("train");
    manifest.config("dataset", dataset_file);
    manifest.config("epochs", std::uint64_t(max_epochs));
    manifest.config("learning_rate", learning_rate);
    manifest.config("batch_size", std::uint64_t(batch_size));
    manifest.config("seed", seed);
    manifest.config("format_version", std::uint64_t{kModelVersion});
    save_model(out_model, model, manifest.config_digest());
    manifest.input(dataset_file);
    manifest.output(out_model);
    manifest.note("best_epoch", result.best_epoch);
    manifest.note("best_val_mse", result.best_val_mse);
    manifest.note("train_seconds", secs);
    manifest.write(out_model + ".manifest.json");
    std::printf("best val MSE %.6e at epoch %d (%.1f s) -> %s\n", result.best_val_mse,
                result.best_epoch, secs, out_model.c_str());
    return 0;
}

int cmd_predict(const std::string& model_file, double lambda, double gamma, double temperature,
                int site, const std::string& out_csv) {
    SurrogateModel model = load_model(model_file);
    const SimulationPoint pt{site, lambda, gamma, temperature};
    validate(pt);
    if (lambda > model.lambda_max || gamma > model.gamma_max ||
        temperature > model.temperature_max)
        std::fprintf(stderr,
                     "warning: parameters outside the training maxima (lambda<=%g gamma<=%g "
                     "T<=%g); extrapolating\n",
                     model.lambda_max, model.gamma_max, model.temperature_max);
    const auto t0 = std::chrono::steady_clock::now();
    const Trajectory traj = predict(model, pt);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_trajectory_csv(out_csv, traj);
    std::printf("predicted %zu steps in %.2f ms -> %s\n", traj.states.size(), ms, out_csv.c_str());
    return 0;
}

int cmd_evaluate(const std::string& model_file, const std::string& dataset_file,
                 const std::string& out_dir) {
    SurrogateModel model = load_model(model_file);
    const Dataset ds = read_dataset(dataset_file);
    const auto test_idx = ds.indices_of(Split::test);
    if (test_idx.empty()) throw DataError("dataset has no test split");
    if (ds.times_fs != model.times_fs)
        throw DataError("model and dataset were built on different time grids");
    fs::create_directories(out_dir);

    std::vector<std::vector<double>> preds, refs;
    preds.reserve(test_idx.size());
    for (auto i : test_idx) {
        preds.push_back(flatten(predict(model, ds.points[i])));
        refs.push_back(ds.targets[i]);
    }
    const ErrorReport pooled = error_report(preds, refs, ds.n_sites);
    write_error_report_text((fs::path(out_dir) / "errors_test.txt").string(), pooled);
    write_error_report_csv((fs::path(out_dir) / "errors_test.csv").string(), pooled);

    const PartitionedReport parts = interpolation_split_eval(model, ds);
    if (parts.interior)
        write_error_report_text((fs::path(out_dir) / "errors_interior.txt").string(),
                                *parts.interior);
    if (parts.exterior)
        write_error_report_text((fs::path(out_dir) / "errors_exterior.txt").string(),
                                *parts.exterior);

    RunManifest manifest("evaluate");
    manifest.config("model", model_file);
    manifest.config("dataset", dataset_file);
    manifest.input(model_file);
    manifest.input(dataset_file);
    manifest.output(out_dir);
    manifest.write((fs::path(out_dir) / "evaluate.manifest.json").string());
    std::printf("test trajectories %zu  mae_diag %.3e  mae_offdiag_re %.3e  mae_offdiag_im %.3e\n",
                pooled.n_trajectories, pooled.mae_diagonal, pooled.mae_offdiag_real,
                pooled.mae_offdiag_imag);
    std::printf("reports -> %s\n", out_dir.c_str());
    return 0;
}

int cmd_bench(const std::string& model_file, int repetitions) {
    SurrogateModel model = load_model(model_file);
    std::vector<SimulationPoint> points;
    for (int j : {0, 1})
        points.push_back({j, 0.5 * model.lambda_max, 0.5 * model.gamma_max,
                          0.5 * model.temperature_max});
    const LatencyStats stats = latency_benchmark(model, points, repetitions);
    std::printf("repetitions %d  median %.2f ms  p95 %.2f ms  min %.2f ms  max %.2f ms\n",
                stats.repetitions, stats.median_ms, stats.p95_ms, stats.min_ms, stats.max_ms);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"surrogate pipeline for open-quantum-system trajectories"};
    app.require_subcommand(1);

    std::string system_file = data_dir() + "/fmo7.txt";
    std::string grid_file, traj_dir = "trajectories", out, dataset_file, model_file, history_file;
    double tmax_fs = 10000.0, lambda = 0, gamma = 0, temperature = 0, learning_rate = 1e-3;
    int jobs = 1, epochs = 10000, batch_size = 16, site = 0, repetitions = 50;
    std::uint64_t seed = 1;

    auto* gen = app.add_subcommand("generate", "propagate reference trajectories for a grid");
    gen->add_option("--system", system_file, "Hamiltonian file");
    gen->add_option("--grid", grid_file, "parameter grid file (default: built-in full grid)");
    gen->add_option("--out", traj_dir, "output directory");
    gen->add_option("--tmax-fs", tmax_fs, "trajectory length in fs (dual-rate grid)");
    gen->add_option("--jobs", jobs, "worker threads");

    auto* build = app.add_subcommand("build-dataset", "flatten + split trajectories");
    build->add_option("--system", system_file, "Hamiltonian file");
    build->add_option("--grid", grid_file, "parameter grid file");
    build->add_option("--traj-dir", traj_dir, "trajectory directory");
    build->add_option("--out", out, "output dataset file")->required();
    build->add_option("--tmax-fs", tmax_fs, "trajectory length in fs");
    std::size_t train_per_site = 500, val_per_site = 100;
    build->add_option("--train-per-site", train_per_site, "FPS training picks per site");
    build->add_option("--val-per-site", val_per_site, "FPS validation picks per site");

    auto* tr = app.add_subcommand("train", "train the surrogate network");
    tr->add_option("--dataset", dataset_file, "dataset file")->required();
    tr->add_option("--out", out, "output model file")->required();
    tr->add_option("--epochs", epochs, "max epochs");
    tr->add_option("--lr", learning_rate, "learning rate");
    tr->add_option("--batch-size", batch_size, "mini-batch size");
    tr->add_option("--seed", seed, "RNG seed (init + shuffling)");
    tr->add_option("--history", history_file, "history log path (default: <out>.history.txt)");

    auto* pred = app.add_subcommand("predict", "one-shot trajectory prediction");
    pred->add_option("--model", model_file, "model file")->required();
    pred->add_option("--lambda", lambda, "reorganization energy, cm^-1")->required();
    pred->add_option("--gamma", gamma, "characteristic frequency, cm^-1")->required();
    pred->add_option("--temperature", temperature, "temperature, K")->required();
    pred->add_option("--site", site, "initial excitation label (0 or 1)");
    pred->add_option("--out", out, "output CSV path")->required();

    auto* ev = app.add_subcommand("evaluate", "error reports on the test split");
    ev->add_option("--model", model_file, "model file")->required();
    ev->add_option("--dataset", dataset_file, "dataset file")->required();
    ev->add_option("--out-dir", out, "report directory")->required();

    auto* bench = app.add_subcommand("bench", "single-thread prediction latency");
    bench->add_option("--model", model_file, "model file")->required();
    bench->add_option("--repetitions", repetitions, "timed repetitions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (gen->parsed()) return cmd_generate(system_file, grid_file, traj_dir, tmax_fs, jobs);
        if (build->parsed())
            return cmd_build_dataset(system_file, grid_file, traj_dir, out, tmax_fs,
                                     train_per_site, val_per_site);
        if (tr->parsed()) {
            if (history_file.empty()) history_file = out + ".history.txt";
            return cmd_train(dataset_file, out, epochs, learning_rate, batch_size, seed,
                             history_file);
        }
        if (pred->parsed()) return cmd_predict(model_file, lambda, gamma, temperature, site, out);
        if (ev->parsed()) return cmd_evaluate(model_file, dataset_file, out);
        if (bench->parsed()) return cmd_bench(model_file, repetitions);
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 1;
}
