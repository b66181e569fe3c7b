#pragma once

#include "egarch/likelihood.hpp"
#include "egarch/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace egarch::test {

/// Random stationary, filter-admissible θ with moderate shocks.
inline ModelParams random_admissible(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double beta = -0.2 + 1.1 * u(rng);  // [-0.2, 0.9)
    const double delta = 0.05 + 0.35 * u(rng);
    const double gamma = delta * (2.0 * u(rng) - 1.0);
    const double alpha = -0.3 + 0.6 * u(rng);
    return {alpha, beta, gamma, delta};
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

inline double rel_err(const Vec4& a, const Vec4& b) {
    return (a - b).lpNorm<Eigen::Infinity>() / std::max({1.0, a.lpNorm<Eigen::Infinity>(), b.lpNorm<Eigen::Infinity>()});
}

inline double rel_err(const Mat4& a, const Mat4& b) {
    return (a - b).lpNorm<Eigen::Infinity>() / std::max({1.0, a.lpNorm<Eigen::Infinity>(), b.lpNorm<Eigen::Infinity>()});
}

inline ModelParams shifted(const ModelParams& p, int coord, double h) {
    Vec4 v = to_vec(p);
    v[coord] += h;
    return from_vec(v);
}

/// Central differences of the quasi-likelihood value.
inline Vec4 fd_gradient(const ModelParams& p, std::span<const double> x, InitialState start, double h = 1e-6) {
    Vec4 g;
    for (int i = 0; i < 4; ++i) {
        g[i] = (quasi_likelihood(shifted(p, i, h), x, start) - quasi_likelihood(shifted(p, i, -h), x, start)) / (2.0 * h);
    }
    return g;
}

/// Central differences of the analytic gradient.
inline Mat4 fd_hessian(const ModelParams& p, std::span<const double> x, InitialState start, double h = 1e-5) {
    Mat4 hess;
    for (int i = 0; i < 4; ++i) {
        const Vec4 up = ql_with_derivatives(shifted(p, i, h), x, start, DerivativeOrder::Gradient, false).gradient;
        const Vec4 dn = ql_with_derivatives(shifted(p, i, -h), x, start, DerivativeOrder::Gradient, false).gradient;
        hess.col(i) = (up - dn) / (2.0 * h);
    }
    return hess;
}

}  // namespace egarch::test
