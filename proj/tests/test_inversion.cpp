#include "egarch/error.hpp"
#include "egarch/experiments.hpp"
#include "egarch/inversion.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace egarch;
using Catch::Approx;

namespace {

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

TEST_CASE("Lipschitz coefficient: hand-evaluated cases", "[inversion][lipschitz]") {
    // max{0.3, ½·0.5·1·e⁰ − 0.3} = max{0.3, −0.05}
    CHECK(lipschitz_coeff({0, 0.3, 0, 0.5}, 1.0) == Approx(0.3));
    CHECK(lipschitz_coeff({0.4, 0.6, -0.1, 0.2}, 0.0) == Approx(0.6));
    // max{0, ½·2·1 − 0}
    CHECK(lipschitz_coeff({0, 0, 0, 2.0}, 1.0) == Approx(1.0));
    // exp(−alpha/(2(1−beta))) scales the shock: alpha = −0.5, beta = 0.5 gives e^{0.5}.
    CHECK(lipschitz_coeff({-0.5, 0.5, 0.1, 0.3}, 10.0) == Approx(0.5 * 4.0 * std::exp(0.5) - 0.5));
    CHECK(lipschitz_coeff({-0.5, 0.5, 0.1, 0.3}, 2.0) == Approx(0.5));
    CHECK(log_lipschitz_coeff({0, 0.3, 0, 0.5}, 1.0) == Approx(std::log(0.3)));
    CHECK(kind_of([] { lipschitz_coeff({0, 0.5, 0.4, 0.3}, 1.0); }) == ErrorKind::InadmissibleParams);
}

TEST_CASE("log Lipschitz coefficient stays finite for huge shocks", "[inversion][lipschitz]") {
    const double v = log_lipschitz_coeff({-50.0, 0.9, 0.0, 1.0}, 1e3);
    // log(½·1000·e^{250} − 0.9) ≈ log 500 + 250
    CHECK(v == Approx(std::log(500.0) + 250.0));
}

TEST_CASE("filter: one hand-evaluated step", "[inversion][filter]") {
    const ModelParams p{0.1, 0.5, 0.2, 0.3};
    const std::vector<double> x{1.0};
    const FilterPath path = filter(p, x);
    REQUIRE(path.g.size() == 1);
    CHECK(path.g0 == Approx(0.2));
    CHECK(path.g[0] == Approx(0.2));
    const double expected = 0.1 + 0.5 * 0.2 + 0.5 * std::exp(-0.1);
    CHECK(expected == Approx(0.652419).margin(1e-6));
    CHECK(path.next == Approx(expected).epsilon(1e-15));
    CHECK(path.residuals[0] == Approx(std::exp(-0.1)));
}

TEST_CASE("filter: noise-free affine recursion", "[inversion][filter]") {
    const ModelParams p{0.2, 0.5, 0.0, 0.0};
    const std::vector<double> x(30, 0.7);
    SECTION("start above K follows 0.4 + 0.6·0.5^t without clamping") {
        const FilterPath path = filter(p, x, InitialState::fixed(1.0));
        for (std::size_t t = 0; t < x.size(); ++t) {
            CHECK(path.g[t] == Approx(0.4 + 0.6 * std::pow(0.5, static_cast<double>(t))).margin(1e-15));
        }
        CHECK(path.clamp_count == 0);
    }
    SECTION("start below K is projected onto K after the first update") {
        const FilterPath path = filter(p, x, InitialState::fixed(0.0));
        CHECK(path.g[0] == 0.0);
        for (std::size_t t = 1; t < x.size(); ++t) {
            CHECK(path.g[t] == Approx(0.4).margin(1e-15));
        }
        CHECK(path.clamp_count >= 1);
    }
}

TEST_CASE("filter: exact inversion at the true parameters", "[inversion][filter]") {
    const ModelParams p{0, 0.5, -0.1, 0.3};
    const SeriesSample s = simulate(p, InnovationSpec::normal(), 10000, 1000, 31);
    const FilterPath path = filter(p, s, (*s.latent_log_var)[0]);
    double worst = 0.0;
    for (std::size_t t = 0; t < s.size(); ++t) {
        worst = std::max(worst, std::abs(path.g[t] - (*s.latent_log_var)[t]));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("filter: state stays in K", "[inversion][filter][property]") {
    std::mt19937_64 gen(7);
    for (int rep = 0; rep < 50; ++rep) {
        const ModelParams p = test::random_admissible(gen);
        const SeriesSample s = simulate(test::random_admissible(gen), InnovationSpec::normal(), 500, 100,
                                        static_cast<std::uint64_t>(rep));
        const FilterPath path = filter(p, s.returns, InitialState::unconditional(0.5));
        const double k = p.unconditional_mean();
        for (std::size_t t = 1; t < path.g.size(); ++t) {
            CHECK(path.g[t] >= k - 1e-12);
        }
        CHECK(path.next >= k - 1e-12);
        if (p.beta >= 0.0) {
            // From inside K with non-negative shocks the recursion never leaves K.
            CHECK(path.clamp_count == 0);
        }
        CHECK(path.residuals.size() == s.size());
    }
}

TEST_CASE("filter: argument checks", "[inversion][filter]") {
    const std::vector<double> x{1.0, 2.0};
    CHECK(kind_of([&] { filter({0, 0.5, 0.5, 0.3}, x); }) == ErrorKind::InadmissibleParams);
    CHECK(kind_of([&] { filter({0, 1.5, 0.0, 0.3}, x); }) == ErrorKind::NonStationary);
    CHECK(kind_of([&] { filter({0, 0.5, 0.0, 0.3}, std::vector<double>{}); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { filter({0, 0.5, 0.0, 0.3}, x, InitialState::fixed(800.0)); }) == ErrorKind::Overflow);
}

TEST_CASE("theoretical check: no shocks gives log beta exactly", "[inversion][theoretical]") {
    const ModelParams p{0.1, 0.5, 0, 0};
    const LyapunovReport r = check_inv_theoretical(p, p, InnovationSpec::normal(), 100, 1);
    CHECK(r.estimate == std::log(0.5));
    CHECK(r.std_error == 0.0);
    CHECK(r.verdict == Verdict::Invertible);
    CHECK(r.method == LyapunovMethod::TheoreticalMC);
}

TEST_CASE("theoretical check: reference invertible point", "[inversion][theoretical]") {
    const ModelParams p{0, 0.5, -0.1, 0.3};
    const LyapunovReport r = check_inv_theoretical(p, p, InnovationSpec::normal(), 10000, 17);
    CHECK(r.verdict == Verdict::Invertible);
    CHECK(r.estimate + 2.58 * r.std_error < 0.0);
    CHECK(r.n_terms == 10000);
}

TEST_CASE("theoretical check: verdict band", "[inversion][theoretical][property]") {
    std::mt19937_64 gen(99);
    for (int rep = 0; rep < 20; ++rep) {
        const ModelParams p = test::random_admissible(gen);
        const LyapunovReport r = check_inv_theoretical(p, p, InnovationSpec::normal(), 500, 5);
        const bool inv = r.estimate + r.z * r.std_error < 0.0;
        const bool not_inv = r.estimate - r.z * r.std_error > 0.0;
        CHECK((r.verdict == Verdict::Invertible) == inv);
        CHECK((r.verdict == Verdict::NotInvertible) == not_inv);
    }
}

TEST_CASE("theoretical check: thread count does not change the result", "[inversion][theoretical]") {
    const ModelParams p{0, 0.8, 0.1, 0.4};
    TheoreticalCheckOptions one;
    one.threads = 1;
    TheoreticalCheckOptions four;
    four.threads = 4;
    const LyapunovReport a = check_inv_theoretical(p, p, InnovationSpec::normal(), 2000, 3, one);
    const LyapunovReport b = check_inv_theoretical(p, p, InnovationSpec::normal(), 2000, 3, four);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);
}

TEST_CASE("theoretical check: preconditions", "[inversion][theoretical]") {
    const ModelParams p{0, 0.5, -0.1, 0.3};
    CHECK(kind_of([&] { check_inv_theoretical(p, p, InnovationSpec::normal(), 99, 1); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { check_inv_theoretical(p, {0, 0.5, 0.4, 0.3}, InnovationSpec::normal(), 100, 1); }) ==
          ErrorKind::InadmissibleParams);
    CHECK(kind_of([&] { check_inv_theoretical({0, 1.0, 0, 0}, p, InnovationSpec::normal(), 100, 1); }) ==
          ErrorKind::NonStationary);
}

TEST_CASE("empirical check: zero data", "[inversion][empirical]") {
    const std::vector<double> zeros(100, 0.0);
    const LyapunovReport r = check_inv_empirical({0, 0.5, 0, 0.3}, zeros, 1e-4);
    CHECK(r.sum == Approx(100.0 * std::log(0.5)));
    CHECK(r.sum == Approx(-69.31).margin(0.01));
    CHECK(r.estimate == Approx(std::log(0.5)));
    CHECK(r.verdict == Verdict::Invertible);
    CHECK(r.method == LyapunovMethod::Empirical);
}

TEST_CASE("empirical check: boundary arithmetic", "[inversion][empirical]") {
    const std::vector<double> one{0.0};
    const LyapunovReport r = check_inv_empirical({0, 1.0 - 1e-12, 0, 0}, one, 1e-4);
    CHECK(r.sum == Approx(-1e-12).margin(1e-15));
    CHECK(r.verdict == Verdict::NotInvertible);
    CHECK(check_inv_empirical({0, 1.0 - 1e-12, 0, 0}, one, 1e-13).verdict == Verdict::Invertible);
    CHECK(kind_of([&] { check_inv_empirical({0, 0.5, 0.4, 0.3}, one, 1e-4); }) == ErrorKind::InadmissibleParams);
    CHECK(kind_of([&] { check_inv_empirical({0, 0.5, 0, 0.3}, one, 0.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("empirical and theoretical verdicts agree on long invertible series", "[inversion][empirical]") {
    const ModelParams p{0, 0.5, -0.1, 0.3};
    const LyapunovReport theo = check_inv_theoretical(p, p, InnovationSpec::normal(), 10000, 4);
    REQUIRE(theo.verdict == Verdict::Invertible);
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
        const SeriesSample s = simulate(p, InnovationSpec::normal(), 20000, 1000, 1000 + rep);
        CHECK(check_inv_empirical(p, s.returns).verdict == Verdict::Invertible);
    }
}

TEST_CASE("empirical and theoretical verdicts agree at a non-invertible point", "[inversion][empirical]") {
    const ModelParams p{0, 0.9, 0.0, 1.0};
    const LyapunovReport theo = check_inv_theoretical(p, p, InnovationSpec::normal(), 10000, 4);
    REQUIRE(theo.verdict == Verdict::NotInvertible);
    const SeriesSample s = simulate(p, InnovationSpec::normal(), 20000, 1000, 5);
    CHECK(check_inv_empirical(p, s.returns).verdict == Verdict::NotInvertible);
}

TEST_CASE("stability: invertible point forgets its initial value", "[inversion][stability]") {
    const ModelParams p{0, 0.5, -0.1, 0.3};
    const SeriesSample s = simulate(p, InnovationSpec::normal(), 10000, 1000, 12);
    const std::vector<double> init{0.0, 1.0, 5.0};
    const StabilityTable table = stability_diagnostic(p, s, init);
    REQUIRE(table.size() == s.size());
    CHECK(table.diff_max[0] == Approx(5.0));
    CHECK(table.max_diff(5000, 10000) < 1e-8);
    REQUIRE(table.criterion.size() == 3);
    CHECK(std::isfinite(table.criterion[0].back()));
}

TEST_CASE("stability: linear recursion contracts by beta each step", "[inversion][stability]") {
    const ModelParams p{0.1, 0.7, 0, 0};
    SeriesSample s;
    s.returns.assign(40, 0.3);
    const std::vector<double> init{1.0, 3.0};  // both inside K = [1/3, ∞)
    const StabilityTable table = stability_diagnostic(p, s, init);
    CHECK(table.criterion.empty());
    for (std::size_t t = 0; t < 40; ++t) {
        CHECK(table.diff_max[t] == Approx(2.0 * std::pow(0.7, static_cast<double>(t))).margin(1e-14));
    }
}

TEST_CASE("stability: needs two initial values", "[inversion][stability]") {
    SeriesSample s;
    s.returns = {0.1, 0.2};
    const std::vector<double> init{0.0};
    CHECK(kind_of([&] { stability_diagnostic({0, 0.5, 0, 0.2}, s, init); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("non-forgetting search is deterministic and accounts for every candidate", "[inversion][stability]") {
    ChaosSearchOptions opts;
    opts.seed = 2;
    opts.n = 4000;
    const ChaosSearchReport a = find_non_forgetting_point(opts);
    const ChaosSearchReport b = find_non_forgetting_point(opts);
    CHECK(a.theta == b.theta);
    CHECK(a.largest_late_diff == b.largest_late_diff);
    const std::size_t accounted = a.forgot + a.overflowed + (a.theta ? 1 : 0);
    CHECK(accounted == a.tried);
}
