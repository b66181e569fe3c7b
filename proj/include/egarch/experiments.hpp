#pragma once

#include "egarch/fit.hpp"
#include "egarch/model.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace egarch {

/// One-step-ahead variance exp(ĝ_{n+1}(θ̂)): filter `returns` at the fitted parameters from the
/// fit's start and exponentiate the state after the last observation.
double forecast(const FitResult& fit, std::span<const double> returns);

struct DomainMapOptions {
    // Step 0.1 on the default 10×10 grid, with gamma = 0 and delta = 0 on grid points.
    double gamma_min = -0.4;
    double gamma_max = 0.5;
    double delta_min = 0.0;
    double delta_max = 0.9;
    std::size_t grid_size = 10;
    double beta_tolerance = 1e-6;
    std::size_t mc_paths = 10000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

/// Largest beta passing the Monte Carlo invertibility check per (gamma, delta) cell, alpha = 0,
/// Gaussian innovations. Cells with delta < |gamma| are absent.
struct DomainGrid {
    std::vector<double> gamma_axis;
    std::vector<double> delta_axis;
    std::vector<std::vector<std::optional<double>>> beta_max;  ///< [gamma index][delta index]
    std::size_t mc_paths = 0;
    std::uint64_t seed = 0;
    double beta_tolerance = 0.0;
};

/// Bisection on beta in [0, 1 − tol] for one cell; every probe reuses `seed`, so the criterion is
/// evaluated on common random numbers. Returns 0 when even beta = 0 fails.
double beta_max_for_cell(double gamma, double delta, double beta_tolerance, std::size_t mc_paths,
                         std::uint64_t seed);

DomainGrid domain_map(const DomainMapOptions& opts);

struct ChaosSearchOptions {
    std::vector<double> beta_grid{0.5, 0.9, 0.95, 0.99};
    std::vector<double> delta_grid{1.0, 2.0, 4.0, 6.0, 8.0, 10.0};
    std::size_t n = 10000;
    double initial_gap = 5.0;  ///< the filter starts at 0 and at this value
    double threshold = 0.1;
    std::uint64_t seed = 0;
};

struct ChaosSearchReport {
    std::optional<ModelParams> theta;  ///< first non-forgetting point, if any
    double late_diff = 0.0;            ///< its max |ĝ^(1)_t − ĝ^(2)_t| over t in [n/2, n)
    std::size_t tried = 0;
    std::size_t forgot = 0;      ///< candidates whose paths merged
    std::size_t overflowed = 0;  ///< candidates whose filter left the ±kLogVarGuard range
    double largest_late_diff = 0.0;  ///< over candidates that stayed within the guard
};

/**
 * Scans theta = (−delta·E|Z|, beta, 0, delta), which has E log σ² = 0, over the grids (delta outer,
 * beta inner). For each point a series is simulated at that point and filtered from 0 and from
 * initial_gap; the search stops at the first point whose paths still differ by more than
 * `threshold` in the second half of the sample. Candidates that overflow are counted and skipped.
 */
ChaosSearchReport find_non_forgetting_point(const ChaosSearchOptions& opts);

struct StudyOptions {
    ModelParams theta0;
    std::vector<std::size_t> n_grid;
    std::size_t replications = 100;
    FitMode mode = FitMode::SQMLE;
    double epsilon = kDefaultEpsilon;
    InnovationSpec innovations{};
    std::size_t burn_in = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    /// Start the optimizer at θ₀ instead of the data-driven default_start().
    bool start_at_truth = false;
    std::size_t precheck_mc_paths = 10000;
};

inline constexpr std::size_t kCoords = 4;
using CoordArray = std::array<double, kCoords>;

struct StudyCell {
    std::size_t n = 0;
    std::size_t attempted = 0;
    std::size_t converged = 0;   ///< fits that converged (bias and RMSE use these)
    std::size_t with_se = 0;     ///< converged fits with valid standard errors (coverage uses these)
    std::size_t errors = 0;      ///< fits that threw
    std::size_t constraint_active = 0;
    CoordArray bias{};
    CoordArray rmse{};
    CoordArray coverage95{};
    CoordArray standardized_var{};
    double within_3se_all = 0.0;  ///< share of fits with every coordinate within 3 se of θ₀
    double forecast_mae = 0.0;
    double forecast_median_abs_err = 0.0;
    double mean_m4 = 0.0;
    double mean_mm_stat = 0.0;
};

struct MCStudyReport {
    std::string kind;
    ModelParams theta0;
    FitMode mode = FitMode::SQMLE;
    double epsilon = 0.0;
    std::size_t replications = 0;
    std::vector<std::size_t> n_grid;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> replication_seeds;  ///< simulate() seed of replication r: first draw of stream r
    std::vector<StudyCell> cells;
    std::array<bool, kCoords> rmse_decreasing{};  ///< RMSE at the largest n below RMSE at the smallest n
    std::array<bool, kCoords> rmse_monotone{};    ///< RMSE decreasing at every step of the grid
    bool forecast_decreasing = false;             ///< median forecast error decreasing along the grid
    /// (θ̂ − θ₀)/se per replication at the largest n; NaN rows for failed fits.
    std::vector<CoordArray> standardized;
};

/// Fits every replication at every n (prefixes of one simulated path) and aggregates bias, RMSE,
/// 95% coverage and forecast error. Fit failures are counted, not fatal.
/// Throws Unidentifiable for gamma0 = delta0 = 0 and InvalidArgument when θ₀ is not
/// invertible by the Monte Carlo check or n_grid is not increasing.
MCStudyReport consistency_study(const StudyOptions& opts);

/// Single-n study for the asymptotic distribution. Additionally requires the population moment
/// statistic E[(beta − ½(gamma Z + delta|Z|))²] < 1.
MCStudyReport normality_study(const StudyOptions& opts);

}  // namespace egarch
