#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <random>

#include "qdlearn/dataset.hpp"
#include "qdlearn/flatten.hpp"

using namespace qdlearn;
namespace fs = std::filesystem;

namespace {

Eigen::MatrixXcd random_density(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXcd a(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) a(r, c) = complexd(u(rng), u(rng));
    Eigen::MatrixXcd rho = a * a.adjoint();
    return rho / rho.trace();
}

// Independent reference: recompute every min-distance from scratch at every
// pick instead of maintaining the incremental cache.
std::vector<std::size_t> brute_force_fps(const std::vector<NormalizedInput>& cand, std::size_t k,
                                         std::size_t seed) {
    std::vector<std::size_t> sel{seed};
    while (sel.size() < k) {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < cand.size(); ++i) {
            double mind = std::numeric_limits<double>::infinity();
            for (auto s : sel) mind = std::min(mind, selection_distance(cand[i], cand[s]));
            if (mind > best_d) {
                best_d = mind;
                best = i;
            }
        }
        sel.push_back(best);
    }
    return sel;
}

std::vector<NormalizedInput> grid3(const std::array<double, 3>& xs, const std::array<double, 3>& ys,
                                   const std::array<double, 3>& zs) {
    std::vector<NormalizedInput> out;
    for (double x : xs)
        for (double y : ys)
            for (double z : zs) out.push_back({{0.0, x, y, z}});
    return out;
}

}  // namespace

TEST_CASE("flattened width and ordering") {
    CHECK(flat_width(7) == 49);
    CHECK(flat_width(2) == 4);
    const auto kinds = element_kinds(7);
    REQUIRE(kinds.size() == 49);
    CHECK(kinds[0] == ElementKind::diagonal);
    CHECK(kinds[1] == ElementKind::offdiag_real);
    CHECK(kinds[2] == ElementKind::offdiag_imag);
    CHECK(kinds[13] == ElementKind::diagonal);  // rho_22 follows the six site-1 pairs
    CHECK(kinds[48] == ElementKind::diagonal);  // rho_77 closes the sample
    CHECK(std::count(kinds.begin(), kinds.end(), ElementKind::diagonal) == 7);
    CHECK(std::count(kinds.begin(), kinds.end(), ElementKind::offdiag_real) == 21);
}

TEST_CASE("flatten a single 2x2 state") {
    Eigen::MatrixXcd rho(2, 2);
    rho << complexd(0.7, 0.0), complexd(0.1, 0.2), complexd(0.1, -0.2), complexd(0.3, 0.0);
    Trajectory traj;
    traj.grid.times_fs = {0.0};
    traj.states = {rho};
    const std::vector<double> flat = flatten(traj);
    CHECK(flat == std::vector<double>{0.7, 0.1, 0.2, 0.3});

    const auto states = unflatten(flat, 2, 1);
    REQUIRE(states.size() == 1);
    CHECK(states[0](1, 0) == complexd(0.1, -0.2));
    CHECK((states[0] - rho).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flatten of a 7-site trajectory has the advertised length and layout") {
    Trajectory traj;
    std::mt19937_64 rng(3);
    const std::size_t n_times = 801;
    traj.grid.times_fs.resize(n_times);
    for (std::size_t i = 0; i < n_times; ++i) traj.grid.times_fs[i] = static_cast<double>(i);
    Eigen::MatrixXcd pure = Eigen::MatrixXcd::Zero(7, 7);
    pure(0, 0) = 1.0;
    traj.states.push_back(pure);
    for (std::size_t i = 1; i < n_times; ++i) traj.states.push_back(random_density(7, rng));

    const std::vector<double> flat = flatten(traj);
    REQUIRE(flat.size() == 39249);
    // first sample is |1><1|: [1, 0, 0, ..., 0]
    CHECK(flat[0] == 1.0);
    for (std::size_t i = 1; i < 49; ++i) CHECK(flat[i] == 0.0);
}

TEST_CASE("flatten/unflatten round-trip is exact on random states") {
    std::mt19937_64 rng(17);
    for (int n : {2, 3, 7}) {
        Trajectory traj;
        traj.grid.times_fs = {0, 1, 2, 3, 4};
        for (int i = 0; i < 5; ++i) traj.states.push_back(random_density(n, rng));
        const auto flat = flatten(traj);
        const auto back = unflatten(flat, n, 5);
        Trajectory rebuilt;
        rebuilt.grid = traj.grid;
        rebuilt.states = back;
        CHECK(flatten(rebuilt) == flat);  // bit-level round trip
        for (std::size_t i = 0; i < 5; ++i) {
            // upper triangles agree exactly; lower is the conjugate by construction
            for (int r = 0; r < n; ++r)
                for (int c = r; c < n; ++c) CHECK(back[i](r, c) == traj.states[i](r, c));
            CHECK(hermiticity_residual(back[i]) == 0.0);
        }
    }
}

TEST_CASE("unflatten rejects inconsistent lengths") {
    std::vector<double> bad(39248);
    CHECK_THROWS_AS(unflatten(bad, 7, 801), std::invalid_argument);
    CHECK_NOTHROW(unflatten(std::vector<double>(39249), 7, 801));
}

TEST_CASE("input normalization divides by the grid maxima") {
    const ParameterGrid g = default_parameter_grid();
    const NormalizedInput top = normalize_input({0, 310, 300, 310}, g);
    CHECK(top.v == std::array<double, 4>{0.0, 1.0, 1.0, 1.0});
    const NormalizedInput low = normalize_input({1, 10, 25, 30}, g);
    CHECK(low.v[0] == 1.0);
    CHECK(low.v[1] == Catch::Approx(10.0 / 310.0).epsilon(1e-15));
    CHECK(low.v[2] == Catch::Approx(25.0 / 300.0).epsilon(1e-15));
    CHECK(low.v[3] == Catch::Approx(30.0 / 310.0).epsilon(1e-15));
}

TEST_CASE("FPS picks the extremes of a line") {
    const std::vector<NormalizedInput> cand = {
        {{0, 0.0, 0.5, 0.5}}, {{0, 0.5, 0.5, 0.5}}, {{0, 1.0, 0.5, 0.5}}};
    const auto sel = farthest_point_sampling(cand, 2, 0);
    CHECK(sel == std::vector<std::size_t>{0, 2});
}

TEST_CASE("FPS with k = n returns every index") {
    const std::vector<NormalizedInput> cand = {
        {{0, 0.1, 0.2, 0.3}}, {{0, 0.9, 0.1, 0.4}}, {{0, 0.4, 0.8, 0.9}}, {{0, 0.2, 0.2, 0.2}}};
    const auto sel = farthest_point_sampling(cand, 4, 1);
    CHECK(sel.size() == 4);
    auto sorted = sel;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(farthest_point_sampling(cand, 4, 1) == sel);  // deterministic
    CHECK_THROWS(farthest_point_sampling(cand, 5, 0));
}

TEST_CASE("FPS on the unit 3x3x3 grid matches the frozen greedy reference") {
    // Expected sequence computed with the brute-force greedy oracle: after the
    // two main-diagonal corners, anti-diagonal edge midpoints (min distance
    // sqrt(1.25)) beat the remaining corners (min distance 1), so greedy does
    // not return the 8-corner set even though that set has the larger min
    // pairwise distance.
    const auto cand = grid3({0, 0.5, 1}, {0, 0.5, 1}, {0, 0.5, 1});
    const auto sel = farthest_point_sampling(cand, 8, 0);
    CHECK(sel == std::vector<std::size_t>{0, 26, 5, 15, 19, 7, 11, 13});
    CHECK(sel == brute_force_fps(cand, 8, 0));

    // k = 2 from a corner does pick the opposite corner
    CHECK(farthest_point_sampling(cand, 2, 0) == std::vector<std::size_t>{0, 26});

    // the corner set's min pairwise distance (1.0) exceeds the greedy set's
    // (sqrt(0.5)): greedy trades optimality for determinism
    auto min_pairwise = [&](const std::vector<std::size_t>& set) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < set.size(); ++a)
            for (std::size_t b = a + 1; b < set.size(); ++b)
                best = std::min(best, selection_distance(cand[set[a]], cand[set[b]]));
        return best;
    };
    std::vector<std::size_t> corners;
    for (std::size_t i = 0; i < cand.size(); ++i) {
        const auto& v = cand[i].v;
        if ((v[1] == 0 || v[1] == 1) && (v[2] == 0 || v[2] == 1) && (v[3] == 0 || v[3] == 1))
            corners.push_back(i);
    }
    REQUIRE(corners.size() == 8);
    CHECK(min_pairwise(corners) == Catch::Approx(1.0));
    CHECK(min_pairwise(sel) < min_pairwise(corners));
}

TEST_CASE("FPS matches the brute-force greedy reference") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // random 3-per-axis grids
    for (int trial = 0; trial < 20; ++trial) {
        auto axis = [&] {
            std::array<double, 3> a{u(rng), u(rng), u(rng)};
            std::sort(a.begin(), a.end());
            return a;
        };
        const auto cand = grid3(axis(), axis(), axis());
        const std::size_t seed = rng() % cand.size();
        for (std::size_t k = 1; k <= 8; ++k)
            CHECK(farthest_point_sampling(cand, k, seed) == brute_force_fps(cand, k, seed));
    }
    // and fully random clouds
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<NormalizedInput> cand;
        for (int i = 0; i < 40; ++i) cand.push_back({{0, u(rng), u(rng), u(rng)}});
        const std::size_t seed = rng() % cand.size();
        CHECK(farthest_point_sampling(cand, 12, seed) == brute_force_fps(cand, 12, seed));
    }
}

TEST_CASE("FPS min-distance trace is non-increasing") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<NormalizedInput> cand;
    for (int i = 0; i < 60; ++i) cand.push_back({{0, u(rng), u(rng), u(rng)}});
    std::vector<double> trace;
    farthest_point_sampling(cand, 30, 7, &trace);
    REQUIRE(trace.size() == 29);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-15);
}

TEST_CASE("FPS selection is permutation-independent on generic inputs") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<NormalizedInput> cand;
    for (int i = 0; i < 50; ++i) cand.push_back({{0, u(rng), u(rng), u(rng)}});
    const auto base = farthest_point_sampling(cand, 20, 4);

    std::vector<std::size_t> perm(cand.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<NormalizedInput> shuffled(cand.size());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled[perm[i]] = cand[i];

    const auto shuffled_sel = farthest_point_sampling(shuffled, 20, perm[4]);
    std::set<std::size_t> base_set(base.begin(), base.end());
    std::set<std::size_t> mapped;
    for (auto s : shuffled_sel)
        mapped.insert(std::find(perm.begin(), perm.end(), s) - perm.begin());
    CHECK(mapped == base_set);
}

TEST_CASE("centroid seeding picks the most central candidate") {
    const auto cand = grid3({0, 0.5, 1}, {0, 0.5, 1}, {0, 0.5, 1});
    const std::size_t seed = centroid_seed_index(cand);
    CHECK(cand[seed].v == std::array<double, 4>{0, 0.5, 0.5, 0.5});
}

namespace {
Dataset synthetic_dataset(const ParameterGrid& grid) {
    Dataset ds;
    ds.n_sites = 7;
    ds.times_fs = {0.0};
    ds.lambda_max = grid.lambda_max();
    ds.gamma_max = grid.gamma_max();
    ds.temperature_max = grid.temperature_max();
    for (const auto& pt : grid.points()) {
        ds.points.push_back(pt);
        ds.inputs.push_back(normalize_input(pt, grid));
        ds.targets.push_back(std::vector<double>(49, pt.lambda_cm1));
    }
    ds.split.assign(ds.size(), Split::test);
    return ds;
}
}  // namespace

TEST_CASE("splits on the full grid reproduce the 1000/200/2760 partition") {
    Dataset ds = synthetic_dataset(default_parameter_grid());
    assign_splits(ds, 500, 100);
    CHECK(ds.indices_of(Split::train).size() == 1000);
    CHECK(ds.indices_of(Split::validation).size() == 200);
    CHECK(ds.indices_of(Split::test).size() == 2760);

    // per-site balance and repeat determinism
    std::size_t train_site0 = 0;
    for (auto i : ds.indices_of(Split::train))
        if (ds.points[i].site_label == 0) ++train_site0;
    CHECK(train_site0 == 500);

    Dataset again = synthetic_dataset(default_parameter_grid());
    assign_splits(again, 500, 100);
    CHECK(again.split == ds.split);
}

TEST_CASE("splits exhaust tiny grids and reject infeasible counts") {
    ParameterGrid g;
    g.lambdas_cm1 = {10.0};
    g.gammas_cm1 = {25.0, 300.0};
    g.temperatures_k = {30.0};
    g.site_labels = {0, 1};
    Dataset ds = synthetic_dataset(g);  // 2 points per site
    assign_splits(ds, 1, 1);
    CHECK(ds.indices_of(Split::test).empty());
    CHECK(ds.indices_of(Split::train).size() == 2);
    CHECK(ds.indices_of(Split::validation).size() == 2);

    CHECK_THROWS_WITH(assign_splits(ds, 2, 1), Catch::Matchers::ContainsSubstring("site label"));
}

TEST_CASE("dataset file round-trip preserves every byte of content") {
    ParameterGrid g;
    g.lambdas_cm1 = {10.0, 310.0};
    g.gammas_cm1 = {25.0, 300.0};
    g.temperatures_k = {30.0, 310.0};
    g.site_labels = {0, 1};
    Dataset ds = synthetic_dataset(g);
    assign_splits(ds, 2, 1);

    const auto path = (fs::temp_directory_path() / "dataset_roundtrip.bin").string();
    write_dataset(path, ds, 99);
    std::uint64_t digest = 0;
    const Dataset back = read_dataset(path, &digest);
    CHECK(digest == 99);
    CHECK(back.n_sites == ds.n_sites);
    CHECK(back.times_fs == ds.times_fs);
    CHECK(back.lambda_max == ds.lambda_max);
    CHECK(back.split == ds.split);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.targets[i] == ds.targets[i]);
        CHECK(back.inputs[i].v == ds.inputs[i].v);
        CHECK(back.points[i].lambda_cm1 == ds.points[i].lambda_cm1);
    }

    // same content written twice gives identical files
    const auto path2 = (fs::temp_directory_path() / "dataset_roundtrip2.bin").string();
    write_dataset(path2, ds, 99);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
    const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
    CHECK(bytes_a == bytes_b);

    // corruption is detected
    {
        std::fstream f(path2, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(64);
        f.put('\x7f');
    }
    CHECK_THROWS(read_dataset(path2));
}
