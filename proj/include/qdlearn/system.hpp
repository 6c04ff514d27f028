#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace qdlearn {

// Site-basis exciton Hamiltonian plus the label -> site map for the initial
// excitation. Immutable after construction; share freely across threads.
struct SystemSpec {
    int n_sites = 0;
    Eigen::MatrixXd hamiltonian;          // n_sites x n_sites, symmetric, cm^-1
    std::string name;
    std::vector<int> excitation_sites;    // excitation_sites[label] = 0-based site index
};

// The four inputs identifying one trajectory. site_label 0 and 1 select the
// first and second entry of SystemSpec::excitation_sites.
struct SimulationPoint {
    int site_label = 0;        // j
    double lambda_cm1 = 0.0;   // reorganization energy
    double gamma_cm1 = 0.0;    // characteristic frequency
    double temperature_k = 0.0;
};

struct ParameterGrid {
    std::vector<double> lambdas_cm1;
    std::vector<double> gammas_cm1;
    std::vector<double> temperatures_k;
    std::vector<int> site_labels;

    std::size_t size() const {
        return lambdas_cm1.size() * gammas_cm1.size() * temperatures_k.size() *
               site_labels.size();
    }
    double lambda_max() const { return lambdas_cm1.back(); }
    double gamma_max() const { return gammas_cm1.back(); }
    double temperature_max() const { return temperatures_k.back(); }

    // Enumeration order is fixed (site, lambda, gamma, T with T fastest) so
    // dataset files are reproducible byte for byte.
    std::vector<SimulationPoint> points() const {
        std::vector<SimulationPoint> out;
        out.reserve(size());
        for (int j : site_labels)
            for (double l : lambdas_cm1)
                for (double g : gammas_cm1)
                    for (double t : temperatures_k) out.push_back({j, l, g, t});
        return out;
    }
};

inline void validate(const SimulationPoint& p) {
    if (p.site_label != 0 && p.site_label != 1)
        throw std::invalid_argument("simulation point: site label must be 0 or 1");
    if (!(p.lambda_cm1 > 0.0 && p.gamma_cm1 > 0.0 && p.temperature_k > 0.0))
        throw std::invalid_argument("simulation point: lambda, gamma, T must be > 0");
}

inline void validate(const ParameterGrid& g) {
    auto check_axis = [](const std::vector<double>& v, const char* what) {
        if (v.empty()) throw std::invalid_argument(std::string("grid: empty ") + what);
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!(v[i] > 0.0))
                throw std::invalid_argument(std::string("grid: non-positive ") + what);
            if (i > 0 && !(v[i] > v[i - 1]))
                throw std::invalid_argument(std::string("grid: ") + what +
                                            " not strictly increasing");
        }
    };
    check_axis(g.lambdas_cm1, "lambda");
    check_axis(g.gammas_cm1, "gamma");
    check_axis(g.temperatures_k, "temperature");
    if (g.site_labels.empty()) throw std::invalid_argument("grid: no site labels");
    for (int j : g.site_labels)
        if (j != 0 && j != 1) throw std::invalid_argument("grid: site labels must be 0 or 1");
}

// Default label -> site map: label 0 excites site 1, label 1 excites the
// "far" site, which for the 7-site complex is site 6 and otherwise the last
// site of the chain.
inline std::vector<int> default_excitation_sites(int n_sites) {
    if (n_sites == 7) return {0, 5};
    return {0, n_sites - 1};
}

// The full 3960-point parameter grid of the reference data set:
// 11 lambdas x 12 gammas x 15 temperatures x 2 excitation sites.
inline ParameterGrid default_parameter_grid() {
    ParameterGrid g;
    for (int i = 0; i < 11; ++i) g.lambdas_cm1.push_back(10.0 + 30.0 * i);
    for (int i = 0; i < 12; ++i) g.gammas_cm1.push_back(25.0 + 25.0 * i);
    for (int i = 0; i < 15; ++i) g.temperatures_k.push_back(30.0 + 20.0 * i);
    g.site_labels = {0, 1};
    return g;
}

namespace detail {
inline std::vector<std::string> read_content_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        lines.push_back(line);
    }
    return lines;
}
}  // namespace detail

// Plain-text Hamiltonian file: first content line n_sites, then n_sites rows
// of whitespace-separated cm^-1 values; '#' starts a comment. Asymmetry above
// 1e-6 cm^-1 is an error; above 1e-9 a warning. The matrix is symmetrized by
// averaging either way.
inline SystemSpec load_system(const std::string& path) {
    auto lines = detail::read_content_lines(path);
    if (lines.empty()) throw std::runtime_error("empty system file: " + path);
    std::ostringstream all;
    for (const auto& l : lines) all << l << ' ';
    std::istringstream in(all.str());

    int n = 0;
    if (!(in >> n) || n < 2)
        throw std::runtime_error("system file: bad site count in " + path);
    Eigen::MatrixXd h(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            if (!(in >> h(r, c)))
                throw std::runtime_error("system file: expected " + std::to_string(n * n) +
                                         " matrix entries in " + path);
    double extra;
    if (in >> extra) throw std::runtime_error("system file: trailing values in " + path);

    const double asym = (h - h.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-6)
        throw std::runtime_error("system file: Hamiltonian asymmetry " + std::to_string(asym) +
                                 " cm^-1 exceeds 1e-6 in " + path);
    if (asym > 1e-9)
        std::cerr << "warning: symmetrizing Hamiltonian in " << path << " (max asymmetry "
                  << asym << " cm^-1)\n";
    Eigen::MatrixXd sym = 0.5 * (h + h.transpose());

    SystemSpec spec;
    spec.n_sites = n;
    spec.hamiltonian = std::move(sym);
    auto slash = path.find_last_of("/\\");
    spec.name = slash == std::string::npos ? path : path.substr(slash + 1);
    if (auto dot = spec.name.find_last_of('.'); dot != std::string::npos)
        spec.name.erase(dot);
    spec.excitation_sites = default_excitation_sites(n);
    return spec;
}

// Writes with max_digits10 so load_system(save_system(s)) is bit-identical.
inline void save_system(const std::string& path, const SystemSpec& spec) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# " << spec.name << ", cm^-1\n" << spec.n_sites << "\n";
    char buf[32];
    for (int r = 0; r < spec.n_sites; ++r) {
        for (int c = 0; c < spec.n_sites; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", spec.hamiltonian(r, c));
            out << (c ? " " : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

// Grid file: lines "lambdas:", "gammas:", "temperatures:", "sites:" followed
// by whitespace-separated values; '#' comments allowed.
inline ParameterGrid load_parameter_grid(const std::string& path) {
    ParameterGrid g;
    bool seen[4] = {false, false, false, false};
    for (const auto& line : detail::read_content_lines(path)) {
        auto colon = line.find(':');
        if (colon == std::string::npos)
            throw std::runtime_error("grid file: expected 'key: values' in " + path);
        std::string key = line.substr(0, colon);
        key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
        std::istringstream vals(line.substr(colon + 1));
        if (key == "lambdas") {
            for (double v; vals >> v;) g.lambdas_cm1.push_back(v);
            seen[0] = true;
        } else if (key == "gammas") {
            for (double v; vals >> v;) g.gammas_cm1.push_back(v);
            seen[1] = true;
        } else if (key == "temperatures") {
            for (double v; vals >> v;) g.temperatures_k.push_back(v);
            seen[2] = true;
        } else if (key == "sites") {
            for (int v; vals >> v;) g.site_labels.push_back(v);
            seen[3] = true;
        } else {
            throw std::runtime_error("grid file: unknown key '" + key + "' in " + path);
        }
    }
    if (!(seen[0] && seen[1] && seen[2] && seen[3]))
        throw std::runtime_error("grid file: missing one of lambdas/gammas/temperatures/sites in " +
                                 path);
    validate(g);
    return g;
}

}  // namespace qdlearn
