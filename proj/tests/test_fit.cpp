#include "egarch/error.hpp"
#include "egarch/fit.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace egarch;
using Catch::Approx;

namespace {

const ModelParams kTheta0{0.0, 0.5, -0.1, 0.3};

ErrorKind kind_of(const auto& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no egarch::Error thrown");
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("fit rejects unusable inputs", "[fit]") {
    const SeriesSample rad = simulate(kTheta0, InnovationSpec::rademacher(), 500, 100, 1);
    CHECK(kind_of([&] { fit(rad, default_start(rad.returns)); }) == ErrorKind::Unidentifiable);

    const SeriesSample normal = simulate(kTheta0, InnovationSpec::normal(), 500, 100, 1);
    FitOptions with_law;
    with_law.innovations = InnovationSpec::rademacher();
    CHECK(kind_of([&] { fit(normal, kTheta0, with_law); }) == ErrorKind::Unidentifiable);

    CHECK(kind_of([&] { fit(normal.head(9), kTheta0); }) == ErrorKind::TooShort);
    CHECK(kind_of([&] { fit(normal, {0, 0.5, 0.4, 0.3}); }) == ErrorKind::InadmissibleParams);
    CHECK(kind_of([&] { fit(normal, {0, 1.2, 0.0, 0.3}); }) == ErrorKind::NonStationary);
}

TEST_CASE("lyapunov_sum gradient matches finite differences", "[fit][property]") {
    std::mt19937_64 gen(55);
    for (int rep = 0; rep < 20; ++rep) {
        const ModelParams p = test::random_admissible(gen);
        const SeriesSample s = simulate(p, InnovationSpec::normal(), 300, 100, static_cast<std::uint64_t>(rep));
        Vec4 g;
        const double v = lyapunov_sum(p, s.returns, &g);
        CHECK(v == Approx(check_inv_empirical(p, s.returns).sum).epsilon(1e-12));
        constexpr double h = 1e-6;
        for (int i = 0; i < 4; ++i) {
            const double fd =
                (lyapunov_sum(test::shifted(p, i, h), s.returns) - lyapunov_sum(test::shifted(p, i, -h), s.returns)) /
                (2.0 * h);
            CHECK(test::rel_err(g[i], fd) < 1e-4);
        }
    }
}

TEST_CASE("fit recovers the parameters", "[fit]") {
    int within = 0;
    constexpr int reps = 10;
    for (int r = 0; r < reps; ++r) {
        const SeriesSample s = simulate(kTheta0, InnovationSpec::normal(), 5000, 1000, 300 + static_cast<std::uint64_t>(r));
        const FitResult f = fit(s, default_start(s.returns));
        REQUIRE(f.converged);
        REQUIRE(f.cov_valid);
        CHECK(f.lyapunov_sum <= -f.epsilon);
        CHECK(f.theta_hat.filter_admissible());
        bool all = true;
        const Vec4 diff = to_vec(f.theta_hat) - to_vec(kTheta0);
        for (int i = 0; i < 4; ++i) {
            CHECK(f.std_errors[i] == Approx(std::sqrt(f.cov(i, i) / 5000.0)).epsilon(1e-12));
            all = all && std::abs(diff[i]) <= 3.0 * f.std_errors[i];
        }
        within += all ? 1 : 0;
        CHECK(f.m4_hat == Approx(3.0).margin(0.4));
        CHECK(f.ql == Approx(quasi_likelihood(f.theta_hat, s.returns)).epsilon(1e-14));
    }
    CHECK(within >= 8);
}

TEST_CASE("QMLE and SQMLE agree when the constraint is inactive", "[fit]") {
    const SeriesSample s = simulate(kTheta0, InnovationSpec::normal(), 4000, 1000, 42);
    FitOptions q;
    q.mode = FitMode::QMLE;
    const FitResult a = fit(s, kTheta0, q);
    const FitResult b = fit(s, kTheta0);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK_FALSE(b.constraint_active);
    CHECK((to_vec(a.theta_hat) - to_vec(b.theta_hat)).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("fit forgets the filter start at rate 1/n", "[fit][property]") {
    // The start perturbs the first few dozen likelihood terms, so the two estimates differ by O(1/n).
    const SeriesSample big = simulate(kTheta0, InnovationSpec::normal(), 160000, 1000, 77);
    FitOptions a;
    a.start = InitialState::fixed(0.0);
    FitOptions b;
    b.start = InitialState::fixed(5.0);
    std::vector<double> gaps;
    for (std::size_t n : {10000u, 40000u, 160000u}) {
        const SeriesSample s = big.head(n);
        const FitResult fa = fit(s, kTheta0, a);
        const FitResult fb = fit(s, kTheta0, b);
        REQUIRE(fa.converged);
        REQUIRE(fb.converged);
        const Vec4 d = to_vec(fa.theta_hat) - to_vec(fb.theta_hat);
        for (int i = 0; i < 4; ++i) {
            CHECK(std::abs(d[i]) < 0.5 * fa.std_errors[i]);
        }
        gaps.push_back(d.lpNorm<Eigen::Infinity>());
    }
    for (std::size_t k = 1; k < gaps.size(); ++k) {
        const double ratio = gaps[k - 1] / gaps[k];
        CHECK(ratio > 3.0);
        CHECK(ratio < 5.5);
    }
}

TEST_CASE("infeasible start triggers the feasibility search", "[fit]") {
    const SeriesSample s = simulate(kTheta0, InnovationSpec::normal(), 2000, 1000, 5);
    const ModelParams bad{0.0, 0.9, 0.0, 6.0};
    REQUIRE(check_inv_empirical(bad, s.returns).verdict == Verdict::NotInvertible);
    const FitResult f = fit(s, bad);
    CHECK(f.feasibility_search);
    CHECK(f.lyapunov_sum <= -f.epsilon);
}

TEST_CASE("binding constraint is reported", "[fit]") {
    const SeriesSample s = simulate(kTheta0, InnovationSpec::normal(), 2000, 1000, 6);
    FitOptions q;
    q.mode = FitMode::QMLE;
    const FitResult free = fit(s, kTheta0, q);
    REQUIRE(free.converged);
    // A margin beyond the unconstrained optimum forces the estimate onto the constraint boundary.
    FitOptions o;
    o.epsilon = -1.2 * free.lyapunov_sum;
    const FitResult f = fit(s, kTheta0, o);
    CHECK(f.lyapunov_sum <= -o.epsilon);
    CHECK(f.constraint_active);
    CHECK(f.ql >= free.ql);
}

TEST_CASE("default start matches the sample scale", "[fit]") {
    const std::vector<double> x(100, std::exp(0.5));  // log E X² = 1
    const ModelParams p = default_start(x);
    CHECK(p.beta == 0.5);
    CHECK(p.gamma == 0.0);
    CHECK(p.delta == 0.2);
    CHECK((p.alpha + p.delta * std::sqrt(2.0 / 3.141592653589793)) / (1.0 - p.beta) == Approx(1.0));
}
