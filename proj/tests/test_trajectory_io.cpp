#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "qdlearn/trajectory_io.hpp"

using namespace qdlearn;
namespace fs = std::filesystem;

namespace {

Trajectory small_trajectory() {
    SystemSpec sys;
    sys.n_sites = 2;
    sys.hamiltonian.resize(2, 2);
    sys.hamiltonian << 0, 100, 100, 200;
    sys.name = "two-site";
    sys.excitation_sites = {0, 1};
    return propagate(sys, {0, 40.0, 75.0, 290.0}, dual_rate_time_grid(50.0));
}

}  // namespace

TEST_CASE("trajectory binary round-trip is bit-exact") {
    const Trajectory traj = small_trajectory();
    const auto path = (fs::temp_directory_path() / "traj_roundtrip.bin").string();
    write_trajectory(path, traj, 0xabcdef0123456789ull);

    std::uint64_t digest = 0;
    const Trajectory back = read_trajectory(path, &digest);
    CHECK(digest == 0xabcdef0123456789ull);
    CHECK(back.point.site_label == traj.point.site_label);
    CHECK(back.point.lambda_cm1 == traj.point.lambda_cm1);
    CHECK(back.grid.times_fs == traj.grid.times_fs);
    REQUIRE(back.states.size() == traj.states.size());
    for (std::size_t i = 0; i < traj.states.size(); ++i)
        CHECK((back.states[i] - traj.states[i]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trajectory reader rejects corruption and truncation") {
    const Trajectory traj = small_trajectory();
    const auto path = (fs::temp_directory_path() / "traj_corrupt.bin").string();
    write_trajectory(path, traj, 1);

    // flip one byte in the middle
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(200);
        char b;
        f.seekg(200);
        f.get(b);
        f.seekp(200);
        f.put(static_cast<char>(b ^ 0x5a));
    }
    CHECK_THROWS_WITH(read_trajectory(path), Catch::Matchers::ContainsSubstring("checksum"));

    write_trajectory(path, traj, 1);
    fs::resize_file(path, fs::file_size(path) - 17);
    CHECK_THROWS(read_trajectory(path));

    // wrong magic
    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << "NOTAMAGICFILE_____________";
    }
    CHECK_THROWS(read_trajectory(path));
}

TEST_CASE("trajectory_file_valid matches header against expectations") {
    const Trajectory traj = small_trajectory();
    const auto path = (fs::temp_directory_path() / "traj_probe.bin").string();
    write_trajectory(path, traj, 42);

    CHECK(trajectory_file_valid(path, traj.point, traj.grid, 2, 42));
    CHECK_FALSE(trajectory_file_valid(path, traj.point, traj.grid, 2, 43));  // other config
    SimulationPoint other = traj.point;
    other.lambda_cm1 += 1.0;
    CHECK_FALSE(trajectory_file_valid(path, other, traj.grid, 2, 42));
    CHECK_FALSE(trajectory_file_valid(path, traj.point, dual_rate_time_grid(25.0), 2, 42));
    CHECK_FALSE(trajectory_file_valid("/nonexistent/file.bin", traj.point, traj.grid, 2, 42));

    fs::resize_file(path, fs::file_size(path) - 1);  // simulated interrupted write
    CHECK_FALSE(trajectory_file_valid(path, traj.point, traj.grid, 2, 42));
}

TEST_CASE("trajectory CSV layout") {
    const Trajectory traj = small_trajectory();
    const auto path = (fs::temp_directory_path() / "traj.csv").string();
    write_trajectory_csv(path, traj);
    std::ifstream in(path);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "t_fs,rho_1_1,rho_1_2_re,rho_1_2_im,rho_2_2");
    CHECK(first.rfind("0.000000,1,", 0) == 0);  // t = 0, population 1 on site 1
    std::size_t rows = 2;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 1 + traj.grid.size());
}
