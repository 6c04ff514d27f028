#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <vector>

#include "qdlearn/lindblad.hpp"

namespace qdlearn {

// One time sample flattens to n + n(n-1) = n^2 reals: the upper triangle row
// by row, each diagonal as one real and each off-diagonal as (re, im).
inline std::size_t flat_width(int n_sites) {
    return static_cast<std::size_t>(n_sites) * static_cast<std::size_t>(n_sites);
}

enum class ElementKind : std::uint8_t { diagonal, offdiag_real, offdiag_imag };

// Kind of each slot within one time sample, in flattening order.
inline std::vector<ElementKind> element_kinds(int n_sites) {
    std::vector<ElementKind> kinds;
    kinds.reserve(flat_width(n_sites));
    for (int r = 0; r < n_sites; ++r) {
        kinds.push_back(ElementKind::diagonal);
        for (int c = r + 1; c < n_sites; ++c) {
            kinds.push_back(ElementKind::offdiag_real);
            kinds.push_back(ElementKind::offdiag_imag);
        }
    }
    return kinds;
}

inline void flatten_state(const Eigen::MatrixXcd& rho, std::span<double> out) {
    const int n = static_cast<int>(rho.rows());
    std::size_t k = 0;
    for (int r = 0; r < n; ++r) {
        out[k++] = rho(r, r).real();
        for (int c = r + 1; c < n; ++c) {
            out[k++] = rho(r, c).real();
            out[k++] = rho(r, c).imag();
        }
    }
}

// Time-major target vector [Y(t_0), Y(t_1), ..., Y(t_M)].
inline std::vector<double> flatten(const Trajectory& traj) {
    const int n = static_cast<int>(traj.states.empty() ? 0 : traj.states.front().rows());
    const std::size_t width = flat_width(n);
    std::vector<double> out(width * traj.states.size());
    for (std::size_t i = 0; i < traj.states.size(); ++i)
        flatten_state(traj.states[i], std::span(out).subspan(i * width, width));
    return out;
}

// Hermitian completion of one flattened sample: rho(c, r) = conj(rho(r, c)).
inline Eigen::MatrixXcd unflatten_state(std::span<const double> values, int n_sites) {
    if (values.size() != flat_width(n_sites))
        throw std::invalid_argument("unflatten_state: length does not match site count");
    Eigen::MatrixXcd rho(n_sites, n_sites);
    std::size_t k = 0;
    for (int r = 0; r < n_sites; ++r) {
        rho(r, r) = values[k++];
        for (int c = r + 1; c < n_sites; ++c) {
            const double re = values[k++];
            const double im = values[k++];
            rho(r, c) = complexd(re, im);
            rho(c, r) = complexd(re, -im);
        }
    }
    return rho;
}

inline std::vector<Eigen::MatrixXcd> unflatten(std::span<const double> values, int n_sites,
                                               std::size_t n_times) {
    const std::size_t width = flat_width(n_sites);
    if (values.size() != width * n_times)
        throw std::invalid_argument("unflatten: expected " + std::to_string(width * n_times) +
                                    " values, got " + std::to_string(values.size()));
    std::vector<Eigen::MatrixXcd> states;
    states.reserve(n_times);
    for (std::size_t i = 0; i < n_times; ++i)
        states.push_back(unflatten_state(values.subspan(i * width, width), n_sites));
    return states;
}

}  // namespace qdlearn
