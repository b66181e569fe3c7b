#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>

namespace egarch::opt {

using Vec = Eigen::Vector4d;

/// Objective with gradient. Returns +∞ (or throws egarch::Error) where undefined;
/// the gradient is only read when the value is finite.
using Objective = std::function<double(const Vec& x, Vec* grad)>;

/// Lower/upper bounds that may depend on the point (used for delta − |gamma| ≤ delta_max − |gamma|).
struct Bounds {
    std::function<void(const Vec& x, Vec& lo, Vec& hi)> at;

    [[nodiscard]] Vec project(const Vec& x) const;
};

struct Options {
    double grad_tol = 1e-6;
    double step_tol = 1e-8;
    int max_iter = 500;
};

enum class Stop { GradientTolerance, StepTolerance, LineSearchStall, MaxIterations, NonFiniteStart };

struct Result {
    Vec x = Vec::Zero();
    double value = 0.0;
    Vec gradient = Vec::Zero();
    int iterations = 0;
    int evaluations = 0;
    Stop stop = Stop::MaxIterations;
    bool used_fallback = false;

    [[nodiscard]] bool converged() const noexcept {
        return stop == Stop::GradientTolerance || stop == Stop::StepTolerance;
    }
};

std::string to_string(Stop stop);

/**
 * Projected BFGS on a (point-dependent) box. Directions are computed on the free variables,
 * trial points are projected back onto the bounds, and steps are accepted by Armijo backtracking
 * along the projected path. Converges when the projected gradient x − P(x − ∇f) is below
 * grad_tol (max-norm) or an accepted step is shorter than step_tol.
 */
Result minimize_bfgs(const Objective& f, const Bounds& bounds, const Vec& x0, const Options& opts = {});

/// Derivative-free fallback on the same bounds. Uses only function values.
Result minimize_nelder_mead(const Objective& f, const Bounds& bounds, const Vec& x0, const Options& opts = {});

}  // namespace egarch::opt
