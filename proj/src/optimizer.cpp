#include "egarch/optimizer.hpp"

#include "egarch/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace egarch::opt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Mat = Eigen::Matrix4d;

double safe_eval(const Objective& f, const Vec& x, Vec* grad, int& evaluations) {
    ++evaluations;
    try {
        const double v = f(x, grad);
        if (!std::isfinite(v) || (grad != nullptr && !grad->allFinite())) {
            return kInf;
        }
        return v;
    } catch (const egarch::Error&) {
        return kInf;
    }
}

}  // namespace

Vec Bounds::project(const Vec& x) const {
    Vec lo;
    Vec hi;
    Vec out = x;
    // Bounds may depend on earlier coordinates, so settle them in order.
    for (int i = 0; i < 4; ++i) {
        at(out, lo, hi);
        out[i] = std::clamp(out[i], lo[i], std::max(lo[i], hi[i]));
    }
    return out;
}

std::string to_string(Stop stop) {
    switch (stop) {
        case Stop::GradientTolerance: return "gradient tolerance";
        case Stop::StepTolerance: return "step tolerance";
        case Stop::LineSearchStall: return "line search stalled";
        case Stop::MaxIterations: return "maximum iterations";
        case Stop::NonFiniteStart: return "non-finite objective at the start";
    }
    return "unknown";
}

Result minimize_bfgs(const Objective& f, const Bounds& bounds, const Vec& x0, const Options& opts) {
    Result res;
    Vec x = bounds.project(x0);
    Vec g;
    double fx = safe_eval(f, x, &g, res.evaluations);
    res.x = x;
    res.value = fx;
    if (!std::isfinite(fx)) {
        res.stop = Stop::NonFiniteStart;
        return res;
    }

    Mat h = Mat::Identity();
    bool fresh = true;  // h is the identity, no curvature information yet
    Vec lo;
    Vec hi;

    for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
        const Vec pg = x - bounds.project(x - g);
        if (pg.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
            res.stop = Stop::GradientTolerance;
            break;
        }

        bounds.at(x, lo, hi);
        Vec free_mask = Vec::Ones();
        for (int i = 0; i < 4; ++i) {
            const bool at_lo = x[i] <= lo[i] + 1e-12 && g[i] > 0.0;
            const bool at_hi = x[i] >= hi[i] - 1e-12 && g[i] < 0.0;
            if (at_lo || at_hi) {
                free_mask[i] = 0.0;
            }
        }
        const Mat p = free_mask.asDiagonal();
        Vec d = -(p * h * p * g);
        if (!(g.dot(d) < 0.0)) {
            h.setIdentity();
            fresh = true;
            d = -(p * g);
        }

        double step = 1.0;
        Vec xt;
        Vec gt;
        double ft = kInf;
        bool accepted = false;
        for (int k = 0; k < 60; ++k, step *= 0.5) {
            xt = bounds.project(x + step * d);
            if ((xt - x).lpNorm<Eigen::Infinity>() == 0.0) {
                break;
            }
            ft = safe_eval(f, xt, &gt, res.evaluations);
            if (std::isfinite(ft) && ft <= fx + 1e-4 * g.dot(xt - x)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!fresh) {
                h.setIdentity();
                fresh = true;
                continue;
            }
            res.stop = Stop::LineSearchStall;
            break;
        }

        const Vec s = xt - x;
        const Vec y = gt - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh) {
                h = Mat::Identity() * (sy / y.squaredNorm());
                fresh = false;
            }
            const double rho = 1.0 / sy;
            const Mat left = Mat::Identity() - rho * s * y.transpose();
            h = left * h * left.transpose() + rho * s * s.transpose();
        }
        x = xt;
        fx = ft;
        g = gt;
        if (s.lpNorm<Eigen::Infinity>() < opts.step_tol) {
            res.stop = Stop::StepTolerance;
            ++res.iterations;
            break;
        }
    }
    res.x = x;
    res.value = fx;
    res.gradient = g;
    return res;
}

Result minimize_nelder_mead(const Objective& f, const Bounds& bounds, const Vec& x0, const Options& opts) {
    Result res;
    res.used_fallback = true;
    std::array<Vec, 5> pts;
    std::array<double, 5> vals{};
    pts[0] = bounds.project(x0);
    for (int i = 0; i < 4; ++i) {
        Vec v = pts[0];
        v[i] += std::max(0.05, 0.05 * std::abs(v[i]));
        v = bounds.project(v);
        if ((v - pts[0]).norm() == 0.0) {
            v[i] -= 2.0 * std::max(0.05, 0.05 * std::abs(pts[0][i]));
            v = bounds.project(v);
        }
        pts[i + 1] = v;
    }
    for (int i = 0; i < 5; ++i) {
        vals[i] = safe_eval(f, pts[i], nullptr, res.evaluations);
    }

    const int max_evals = std::max(opts.max_iter * 10, 200);
    std::array<int, 5> order{};
    res.stop = Stop::MaxIterations;
    while (res.evaluations < max_evals) {
        ++res.iterations;
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
        const int best = order[0];
        const int worst = order[4];
        const int second = order[3];

        double diameter = 0.0;
        for (int i = 1; i < 5; ++i) {
            diameter = std::max(diameter, (pts[order[i]] - pts[best]).lpNorm<Eigen::Infinity>());
        }
        if (std::isfinite(vals[worst]) && vals[worst] - vals[best] <= 1e-12 * (1.0 + std::abs(vals[best])) &&
            diameter < std::max(opts.step_tol, 1e-7)) {
            res.stop = Stop::StepTolerance;
            break;
        }

        Vec centroid = Vec::Zero();
        for (int i = 0; i < 4; ++i) {
            centroid += pts[order[i]];
        }
        centroid /= 4.0;

        const Vec reflected = bounds.project(centroid + (centroid - pts[worst]));
        const double fr = safe_eval(f, reflected, nullptr, res.evaluations);
        if (fr < vals[best]) {
            const Vec expanded = bounds.project(centroid + 2.0 * (centroid - pts[worst]));
            const double fe = safe_eval(f, expanded, nullptr, res.evaluations);
            if (fe < fr) {
                pts[worst] = expanded;
                vals[worst] = fe;
            } else {
                pts[worst] = reflected;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = reflected;
            vals[worst] = fr;
            continue;
        }
        const Vec contracted = bounds.project(centroid + 0.5 * (pts[worst] - centroid));
        const double fc = safe_eval(f, contracted, nullptr, res.evaluations);
        if (fc < vals[worst]) {
            pts[worst] = contracted;
            vals[worst] = fc;
            continue;
        }
        for (int i = 1; i < 5; ++i) {
            const int k = order[i];
            pts[k] = bounds.project(pts[best] + 0.5 * (pts[k] - pts[best]));
            vals[k] = safe_eval(f, pts[k], nullptr, res.evaluations);
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    res.x = pts[best];
    res.value = vals[best];
    return res;
}

}  // namespace egarch::opt
