#pragma once

#include "egarch/experiments.hpp"
#include "egarch/fit.hpp"
#include "egarch/inversion.hpp"
#include "egarch/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace egarch::io {

using Json = nlohmann::ordered_json;

/// Shortest text that reads back as the same double (17 significant digits).
std::string format_double(double v);

/**
 * @brief Parses a return series from CSV text.
 *
 * Accepts a header row (the `column` name, else `x`, else the only column) or a single
 * headerless numeric column. With a header, `log_sigma2` and `z` columns are loaded as the latent
 * state and innovations. Throws ParseError with the row/column of a malformed cell and
 * NonFiniteValue naming the row of a NaN/Inf value. `source` only labels messages.
 */
SeriesSample parse_series(std::string_view text, const std::optional<std::string>& column = std::nullopt,
                          std::string_view source = "<input>");

/// Reads `path` and calls parse_series; Io when the file cannot be read.
SeriesSample load_series(const std::filesystem::path& path, const std::optional<std::string>& column = std::nullopt);

/// Throws TooShort when the series has fewer than `min_rows` observations.
void require_length(const SeriesSample& series, std::size_t min_rows);

/// CSV `t,x[,log_sigma2][,z]` with t counted from 1.
std::string series_csv(const SeriesSample& series);
/// CSV `gamma,delta,beta_max`, one row per admissible cell.
std::string domain_csv(const DomainGrid& grid);
/// CSV `t,diff_max[,criterion]`; the criterion column follows the first initial value.
std::string stability_csv(const StabilityTable& table);
/// CSV `replication,alpha,beta,gamma,delta` of standardized estimates.
std::string standardized_csv(const MCStudyReport& report);

Json to_json(const ModelParams& p);
Json to_json(const FitResult& fit);
Json to_json(const LyapunovReport& report);
Json to_json(const MCStudyReport& report);
Json to_json(const DomainGrid& grid);

/// Reads alpha/beta/gamma/delta from the top level or from a FitResult's `theta_hat`.
ModelParams params_from_json(const Json& j);
ModelParams load_params(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace egarch::io
