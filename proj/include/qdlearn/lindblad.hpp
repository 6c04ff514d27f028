#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "qdlearn/constants.hpp"
#include "qdlearn/system.hpp"
#include "qdlearn/time_grid.hpp"

namespace qdlearn {

using complexd = std::complex<double>;

// Failures of the numerics themselves (as opposed to bad inputs or files).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Drude-Lorentz spectral density J(w) = 2 l g w / (w^2 + g^2), cm^-1.
// Odd in w, peaks at w = g with J(g) = l.
inline double spectral_density(double omega_cm1, double lambda_cm1, double gamma_cm1) {
    return 2.0 * lambda_cm1 * gamma_cm1 * omega_cm1 /
           (omega_cm1 * omega_cm1 + gamma_cm1 * gamma_cm1);
}

// Bose-Einstein occupation 1/(exp(w/kT) - 1); w and kT in cm^-1. The w = 0
// dephasing channel has its own closed-form limit, so w = 0 is rejected here.
inline double bose_occupation(double omega_cm1, double temperature_k) {
    if (omega_cm1 == 0.0)
        throw std::invalid_argument("bose_occupation: w = 0 is the dephasing limit");
    return 1.0 / std::expm1(omega_cm1 / thermal_energy_cm1(temperature_k));
}

// Relaxation rate of the exciton channel at transition frequency w (positive
// downhill), 1/ps. The overall normalization is Gamma(w) = 2 J(w) (1 + n(w))
// with J converted to rad/ps; the leading factor 2 is the one convention knob
// and rescales all relaxation times uniformly. Uphill and downhill are
// evaluated in separate branches: the signed identity J(-w)(1 + n(-w)) =
// J(w) n(w) holds algebraically but cancels catastrophically in floating
// point, and detailed balance is required to 1e-12.
inline constexpr double kRatePrefactor = 2.0;

inline double transition_rate_per_ps(double omega_cm1, double lambda_cm1, double gamma_cm1,
                                     double temperature_k) {
    const double w = std::abs(omega_cm1);
    const double occ = bose_occupation(w, temperature_k);
    const double j = spectral_density(w, lambda_cm1, gamma_cm1);
    const double weight = omega_cm1 > 0.0 ? j * (1.0 + occ) : j * occ;
    return kRatePrefactor * cm1_to_angular_frequency(weight);
}

// w -> 0 limit of J(w) n(w): 2 l kT / g, converted like the finite-w rates.
inline double dephasing_rate_per_ps(double lambda_cm1, double gamma_cm1, double temperature_k) {
    const double weight = 2.0 * lambda_cm1 * thermal_energy_cm1(temperature_k) / gamma_cm1;
    return kRatePrefactor * cm1_to_angular_frequency(weight);
}

// Column-stacking: vec(rho)[r + c*n] = rho(r, c).
inline Eigen::VectorXcd vec(const Eigen::MatrixXcd& m) {
    return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

inline Eigen::MatrixXcd unvec(const Eigen::VectorXcd& v, int n) {
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), n, n);
}

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Local-thermalising Lindblad generator in the site basis. The superoperator
// acts on column-stacked density matrices, units 1/ps.
struct LindbladGenerator {
    int n_sites = 0;
    Eigen::MatrixXcd superop;               // n^2 x n^2
    Eigen::VectorXd exciton_energies_cm1;   // ascending
    Eigen::MatrixXd exciton_vectors;        // columns = exciton states in the site basis

    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const {
        return unvec(superop * vec(rho), n_sites);
    }
};

// Diagonalizes H, attaches a jump operator |a><b| to every ordered exciton
// pair with rates J(w)(1+n) downhill / J(w) n uphill, plus the w -> 0 pure
// dephasing channel on each exciton projector, and assembles
// -i[H, .] + dissipator into one superoperator. Detailed balance
// Gamma_up/Gamma_down = exp(-w/kT) holds pairwise by construction.
inline LindbladGenerator build_generator(const SystemSpec& sys, const SimulationPoint& pt) {
    validate(pt);
    const int n = sys.n_sites;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.hamiltonian);
    if (es.info() != Eigen::Success)
        throw NumericError("exciton diagonalization failed");
    const Eigen::VectorXd energies = es.eigenvalues();
    const Eigen::MatrixXd vecs = es.eigenvectors();
    for (int a = 1; a < n; ++a)
        if (energies[a] - energies[a - 1] < 1e-9)
            throw NumericError(
                "degenerate exciton energies: secular rate construction is undefined");

    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd dissipator = Eigen::MatrixXd::Zero(n * n, n * n);
    for (int b = 0; b < n; ++b) {
        const Eigen::MatrixXd proj_b = vecs.col(b) * vecs.col(b).transpose();
        for (int a = 0; a < n; ++a) {
            const double rate =
                a == b ? dephasing_rate_per_ps(pt.lambda_cm1, pt.gamma_cm1, pt.temperature_k)
                       : transition_rate_per_ps(energies[b] - energies[a], pt.lambda_cm1,
                                                pt.gamma_cm1, pt.temperature_k);
            const Eigen::MatrixXd jump = vecs.col(a) * vecs.col(b).transpose();
            dissipator += rate * kron(jump, jump);
            dissipator -= 0.5 * rate * (kron(id, proj_b) + kron(proj_b, id));
        }
    }

    const Eigen::MatrixXd h_rad = cm1_to_angular_frequency(1.0) * sys.hamiltonian;
    LindbladGenerator gen;
    gen.n_sites = n;
    gen.superop = complexd(0.0, -1.0) * (kron(id, h_rad) - kron(h_rad, id));
    gen.superop += dissipator;
    gen.exciton_energies_cm1 = energies;
    gen.exciton_vectors = vecs;
    return gen;
}

// exp(L dt) for one step, via scaling-and-squaring Pade.
inline Eigen::MatrixXcd step_propagator(const LindbladGenerator& gen, double dt_fs) {
    const double dt_ps = dt_fs * 1e-3;
    return (gen.superop * dt_ps).exp();
}

// Thermal state exp(-H/kT)/Z in the exciton basis, expressed in the site
// basis. This is the stationary state of the generator.
inline Eigen::MatrixXcd gibbs_state(const LindbladGenerator& gen, double temperature_k) {
    const double kt = thermal_energy_cm1(temperature_k);
    const double e_min = gen.exciton_energies_cm1.minCoeff();
    Eigen::VectorXd w = (-(gen.exciton_energies_cm1.array() - e_min) / kt).exp();
    w /= w.sum();
    Eigen::MatrixXd rho = gen.exciton_vectors * w.asDiagonal() * gen.exciton_vectors.transpose();
    return rho.cast<complexd>();
}

inline Eigen::MatrixXcd initial_state(const SystemSpec& sys, int site_label) {
    if (site_label < 0 || site_label >= static_cast<int>(sys.excitation_sites.size()))
        throw std::invalid_argument("initial_state: unknown excitation label");
    const int s = sys.excitation_sites[static_cast<std::size_t>(site_label)];
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(sys.n_sites, sys.n_sites);
    rho(s, s) = 1.0;
    return rho;
}

struct Trajectory {
    SimulationPoint point;
    TimeGrid grid;
    std::vector<Eigen::MatrixXcd> states;
};

// rho(t_i) = exp(L t_i) rho(0), computed by precomputing one propagator per
// distinct step size (5 fs and 25 fs on the dual-rate grid) and applying them
// in sequence. L is time independent, so this is exact to machine precision.
inline Trajectory propagate(const SystemSpec& sys, const SimulationPoint& pt,
                            const TimeGrid& grid) {
    validate(grid);
    const LindbladGenerator gen = build_generator(sys, pt);
    const int n = sys.n_sites;

    Trajectory traj;
    traj.point = pt;
    traj.grid = grid;
    traj.states.reserve(grid.size());
    traj.states.push_back(initial_state(sys, pt.site_label));

    std::map<double, Eigen::MatrixXcd> propagators;
    Eigen::VectorXcd state = vec(traj.states.front());
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double dt_fs = grid.times_fs[i] - grid.times_fs[i - 1];
        auto it = propagators.find(dt_fs);
        if (it == propagators.end())
            it = propagators.emplace(dt_fs, step_propagator(gen, dt_fs)).first;
        state = it->second * state;
        if (!state.allFinite())
            throw NumericError("propagate: non-finite state at step " + std::to_string(i));
        traj.states.push_back(unvec(state, n));
    }
    return traj;
}

// Density-matrix diagnostics.
inline double trace_deviation(const Eigen::MatrixXcd& rho) {
    return std::abs(rho.trace() - complexd(1.0, 0.0));
}

inline double hermiticity_residual(const Eigen::MatrixXcd& rho) {
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

inline double min_eigenvalue(const Eigen::MatrixXcd& rho) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho + rho.adjoint()),
                                                       Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace qdlearn
