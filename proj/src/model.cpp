#include "egarch/model.hpp"

#include "egarch/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace egarch {

bool ModelParams::stationary() const noexcept { return std::abs(beta) < 1.0; }

bool ModelParams::filter_admissible() const noexcept { return delta >= std::abs(gamma); }

bool ModelParams::finite() const noexcept {
    return std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma) && std::isfinite(delta);
}

double ModelParams::unconditional_mean() const noexcept { return alpha / (1.0 - beta); }

void require_stationary(const ModelParams& params) {
    if (!params.finite()) {
        throw Error(ErrorKind::InvalidArgument, "model parameters must be finite");
    }
    if (!params.stationary()) {
        std::ostringstream msg;
        msg << "|beta| = " << std::abs(params.beta) << " >= 1: stationarity condition (ST) violated";
        throw Error(ErrorKind::NonStationary, msg.str());
    }
}

void require_admissible(const ModelParams& params) {
    if (!params.filter_admissible()) {
        std::ostringstream msg;
        msg << "delta = " << params.delta << " < |gamma| = " << std::abs(params.gamma)
            << ": filter admissibility (INV) violated";
        throw Error(ErrorKind::InadmissibleParams, msg.str());
    }
}

void InnovationSpec::validate() const {
    if (kind == InnovationKind::StudentT && !(dof > 4.0 && std::isfinite(dof))) {
        throw Error(ErrorKind::InvalidArgument,
                    "Student-t innovations need dof > 4 so that E[Z^4] is finite (MM)");
    }
}

double InnovationSpec::mean_abs() const {
    switch (kind) {
        case InnovationKind::StandardNormal:
            return std::sqrt(2.0 / std::numbers::pi);
        case InnovationKind::StudentT: {
            validate();
            const double nu = dof;
            const double log_e_abs_t = std::log(2.0) + 0.5 * std::log(nu) + std::lgamma(0.5 * (nu + 1.0)) -
                                       0.5 * std::log(std::numbers::pi) - std::log(nu - 1.0) -
                                       std::lgamma(0.5 * nu);
            return std::sqrt((nu - 2.0) / nu) * std::exp(log_e_abs_t);
        }
        case InnovationKind::Rademacher:
            return 1.0;
    }
    return 0.0;
}

double InnovationSpec::fourth_moment() const {
    switch (kind) {
        case InnovationKind::StandardNormal:
            return 3.0;
        case InnovationKind::StudentT:
            validate();
            return 3.0 * (dof - 2.0) / (dof - 4.0);
        case InnovationKind::Rademacher:
            return 1.0;
    }
    return 0.0;
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x45474152u};
    return Rng(seq);
}

InnovationSampler::InnovationSampler(const InnovationSpec& spec) : spec_(spec) {
    spec_.validate();
    if (spec_.kind == InnovationKind::StudentT) {
        student_ = std::student_t_distribution<double>(spec_.dof);
        t_scale_ = std::sqrt((spec_.dof - 2.0) / spec_.dof);
    }
}

double InnovationSampler::operator()(Rng& rng) {
    switch (spec_.kind) {
        case InnovationKind::StandardNormal:
            return normal_(rng);
        case InnovationKind::StudentT:
            return t_scale_ * student_(rng);
        case InnovationKind::Rademacher:
            return coin_(rng) ? 1.0 : -1.0;
    }
    return 0.0;
}

SeriesSample SeriesSample::head(std::size_t n) const {
    n = std::min(n, size());
    SeriesSample out;
    out.returns.assign(returns.begin(), returns.begin() + static_cast<std::ptrdiff_t>(n));
    if (latent_log_var) {
        out.latent_log_var.emplace(latent_log_var->begin(), latent_log_var->begin() + static_cast<std::ptrdiff_t>(n));
    }
    if (innovations) {
        out.innovations.emplace(innovations->begin(), innovations->begin() + static_cast<std::ptrdiff_t>(n));
    }
    return out;
}

namespace {

void require_finite(const std::vector<double>& v, const char* name) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            std::ostringstream msg;
            msg << name << "[" << i << "] is not finite";
            throw Error(ErrorKind::NonFiniteValue, msg.str());
        }
    }
}

}  // namespace

void require_within_guard(double log_var, std::size_t t) {
    if (!(std::abs(log_var) <= kLogVarGuard)) {
        std::ostringstream msg;
        msg << "log-variance " << log_var << " at t=" << t << " exceeds the guard bound ±" << kLogVarGuard;
        throw Error(ErrorKind::Overflow, msg.str());
    }
}

void SeriesSample::validate() const {
    require_finite(returns, "x");
    if (latent_log_var) {
        if (latent_log_var->size() != returns.size()) {
            throw Error(ErrorKind::InvalidArgument, "latent log-variance length differs from the series length");
        }
        require_finite(*latent_log_var, "log_sigma2");
    }
    if (innovations) {
        if (innovations->size() != returns.size()) {
            throw Error(ErrorKind::InvalidArgument, "innovation length differs from the series length");
        }
        require_finite(*innovations, "z");
    }
}

SeriesSample simulate_from_innovations(const ModelParams& params, std::span<const double> innovations,
                                       std::optional<double> log_var0) {
    require_stationary(params);
    const std::size_t n = innovations.size();
    SeriesSample out;
    out.returns.resize(n);
    out.latent_log_var.emplace(n);
    out.innovations.emplace(innovations.begin(), innovations.end());

    double log_var = log_var0.value_or(params.unconditional_mean());
    for (std::size_t t = 0; t < n; ++t) {
        require_within_guard(log_var, t);
        const double z = innovations[t];
        (*out.latent_log_var)[t] = log_var;
        out.returns[t] = std::exp(0.5 * log_var) * z;
        log_var = params.alpha + params.beta * log_var + params.gamma * z + params.delta * std::abs(z);
    }
    return out;
}

SeriesSample simulate(const ModelParams& params, const InnovationSpec& innov, std::size_t n,
                      std::size_t burn_in, std::uint64_t seed) {
    require_stationary(params);
    if (n == 0) {
        throw Error(ErrorKind::InvalidArgument, "simulate needs n >= 1");
    }
    InnovationSampler draw(innov);
    Rng rng = make_stream(seed);

    double log_var = params.unconditional_mean();
    for (std::size_t t = 0; t < burn_in; ++t) {
        const double z = draw(rng);
        log_var = params.alpha + params.beta * log_var + params.gamma * z + params.delta * std::abs(z);
        require_within_guard(log_var, t);
    }

    std::vector<double> z(n);
    for (auto& v : z) {
        v = draw(rng);
    }
    return simulate_from_innovations(params, z, log_var);
}

std::vector<double> ma_infinity_log_var(const ModelParams& params, std::span<const double> innovations,
                                        std::size_t truncation) {
    require_stationary(params);
    if (truncation == 0) {
        throw Error(ErrorKind::InvalidArgument, "MA(inf) truncation must be >= 1");
    }
    const std::size_t n = innovations.size();
    if (n < truncation) {
        return {};
    }
    std::vector<double> shock(n);
    for (std::size_t i = 0; i < n; ++i) {
        shock[i] = params.gamma * innovations[i] + params.delta * std::abs(innovations[i]);
    }
    const double mean = params.unconditional_mean();
    std::vector<double> out(n - truncation + 1);
    for (std::size_t j = 0; j < out.size(); ++j) {
        const std::size_t t = truncation + j;
        // Horner from the oldest lag keeps the summation order fixed.
        double acc = 0.0;
        for (std::size_t k = truncation; k >= 1; --k) {
            acc = params.beta * acc + shock[t - k];
        }
        out[j] = mean + acc;
    }
    return out;
}

std::size_t ma_truncation_for(double beta, double tol) {
    const double b = std::abs(beta);
    if (b < tol) {
        return 1;
    }
    if (b >= 1.0) {
        throw Error(ErrorKind::NonStationary, "|beta| >= 1: stationarity condition (ST) violated");
    }
    auto k = static_cast<std::size_t>(std::ceil(std::log(tol) / std::log(b)));
    while (std::pow(b, static_cast<double>(k)) >= tol) {
        ++k;
    }
    return std::max<std::size_t>(k, 1);
}

}  // namespace egarch
