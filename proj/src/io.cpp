#include "egarch/io.hpp"

#include "egarch/error.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

namespace egarch::io {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '"')) {
        ++b;
    }
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '"')) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_row(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

/// strtod accepts nan/inf spellings; the caller decides what a non-finite value means.
std::optional<double> parse_number(const std::string& cell) {
    if (cell.empty()) {
        return std::nullopt;
    }
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) {
        return std::nullopt;
    }
    return v;
}

[[noreturn]] void parse_error(std::string_view source, std::size_t row, std::size_t col, const std::string& what) {
    std::ostringstream msg;
    msg << source << ": row " << row << ", column " << col << ": " << what;
    throw Error(ErrorKind::ParseError, msg.str());
}

Json vec_json(const Vec4& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < 4; ++i) {
        a.push_back(v[i]);
    }
    return a;
}

template <std::size_t N>
Json array_json(const std::array<double, N>& v) {
    Json a = Json::array();
    for (double x : v) {
        a.push_back(x);
    }
    return a;
}

template <std::size_t N>
Json bool_array_json(const std::array<bool, N>& v) {
    Json a = Json::array();
    for (bool x : v) {
        a.push_back(x);
    }
    return a;
}

double number_field(const Json& j, const char* key) {
    if (!j.contains(key)) {
        throw Error(ErrorKind::ParseError, std::string("parameter JSON lacks the field '") + key + "'");
    }
    const Json& v = j.at(key);
    if (!v.is_number()) {
        throw Error(ErrorKind::ParseError, std::string("parameter field '") + key + "' is not a number");
    }
    return v.get<double>();
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

SeriesSample parse_series(std::string_view text, const std::optional<std::string>& column, std::string_view source) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        lines.push_back(line);
        if (nl == std::string_view::npos) {
            break;
        }
        pos = nl + 1;
    }
    // Drop trailing blank lines.
    while (!lines.empty() && trim(lines.back()).empty()) {
        lines.pop_back();
    }
    if (lines.empty()) {
        throw Error(ErrorKind::ParseError, std::string(source) + ": empty file");
    }

    const std::vector<std::string> first = split_row(lines.front());
    const bool headerless = first.size() == 1 && parse_number(first.front()).has_value();
    if (headerless && column) {
        throw Error(ErrorKind::ParseError,
                    std::string(source) + ": column '" + *column + "' requested but the file has no header");
    }

    std::size_t value_col = 0;
    std::optional<std::size_t> latent_col;
    std::optional<std::size_t> z_col;
    std::size_t width = 1;
    if (!headerless) {
        width = first.size();
        auto find = [&](std::string_view name) -> std::optional<std::size_t> {
            const auto it = std::find(first.begin(), first.end(), name);
            if (it == first.end()) {
                return std::nullopt;
            }
            return static_cast<std::size_t>(it - first.begin());
        };
        if (column) {
            const auto c = find(*column);
            if (!c) {
                throw Error(ErrorKind::ParseError, std::string(source) + ": no column named '" + *column + "'");
            }
            value_col = *c;
        } else if (const auto c = find("x")) {
            value_col = *c;
        } else if (first.size() == 1) {
            value_col = 0;
        } else {
            throw Error(ErrorKind::ParseError,
                        std::string(source) + ": several columns and none named 'x'; pass a column name");
        }
        latent_col = find("log_sigma2");
        z_col = find("z");
    }

    SeriesSample out;
    std::vector<double> latent;
    std::vector<double> z;
    const std::size_t first_data = headerless ? 0 : 1;
    for (std::size_t li = first_data; li < lines.size(); ++li) {
        const std::size_t row = li + 1;  // 1-based line number in the file
        if (trim(lines[li]).empty()) {
            parse_error(source, row, 1, "empty row");
        }
        const std::vector<std::string> cells = split_row(lines[li]);
        if (cells.size() != width) {
            std::ostringstream what;
            what << "expected " << width << " fields, found " << cells.size();
            parse_error(source, row, std::min(cells.size(), width) + 1, what.str());
        }
        auto read = [&](std::size_t col) {
            const auto v = parse_number(cells[col]);
            if (!v) {
                parse_error(source, row, col + 1, "'" + cells[col] + "' is not a number");
            }
            if (!std::isfinite(*v)) {
                std::ostringstream msg;
                msg << source << ": row " << row << ", column " << col + 1 << ": non-finite value '" << cells[col]
                    << "'";
                throw Error(ErrorKind::NonFiniteValue, msg.str());
            }
            return *v;
        };
        out.returns.push_back(read(value_col));
        if (latent_col) {
            latent.push_back(read(*latent_col));
        }
        if (z_col) {
            z.push_back(read(*z_col));
        }
    }
    if (latent_col) {
        out.latent_log_var = std::move(latent);
    }
    if (z_col) {
        out.innovations = std::move(z);
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw Error(ErrorKind::Io, "error while reading '" + path.string() + "'");
    }
    return buf.str();
}

SeriesSample load_series(const std::filesystem::path& path, const std::optional<std::string>& column) {
    return parse_series(read_file(path), column, path.string());
}

void require_length(const SeriesSample& series, std::size_t min_rows) {
    if (series.size() < min_rows) {
        std::ostringstream msg;
        msg << "the series has " << series.size() << " rows; at least " << min_rows << " are needed";
        throw Error(ErrorKind::TooShort, msg.str());
    }
}

std::string series_csv(const SeriesSample& series) {
    std::string out = "t,x";
    if (series.latent_log_var) {
        out += ",log_sigma2";
    }
    if (series.innovations) {
        out += ",z";
    }
    out += '\n';
    for (std::size_t t = 0; t < series.size(); ++t) {
        out += std::to_string(t + 1);
        out += ',';
        out += format_double(series.returns[t]);
        if (series.latent_log_var) {
            out += ',';
            out += format_double((*series.latent_log_var)[t]);
        }
        if (series.innovations) {
            out += ',';
            out += format_double((*series.innovations)[t]);
        }
        out += '\n';
    }
    return out;
}

std::string domain_csv(const DomainGrid& grid) {
    std::string out = "gamma,delta,beta_max\n";
    for (std::size_t i = 0; i < grid.gamma_axis.size(); ++i) {
        for (std::size_t j = 0; j < grid.delta_axis.size(); ++j) {
            if (!grid.beta_max[i][j]) {
                continue;
            }
            out += format_double(grid.gamma_axis[i]) + ',' + format_double(grid.delta_axis[j]) + ',' +
                   format_double(*grid.beta_max[i][j]) + '\n';
        }
    }
    return out;
}

std::string stability_csv(const StabilityTable& table) {
    const bool with_criterion = !table.criterion.empty();
    std::string out = with_criterion ? "t,diff_max,criterion\n" : "t,diff_max\n";
    for (std::size_t t = 0; t < table.size(); ++t) {
        out += std::to_string(t + 1) + ',' + format_double(table.diff_max[t]);
        if (with_criterion) {
            out += ',' + format_double(table.criterion.front()[t]);
        }
        out += '\n';
    }
    return out;
}

std::string standardized_csv(const MCStudyReport& report) {
    std::string out = "replication,alpha,beta,gamma,delta\n";
    for (std::size_t r = 0; r < report.standardized.size(); ++r) {
        out += std::to_string(r);
        for (double v : report.standardized[r]) {
            out += ',' + format_double(v);
        }
        out += '\n';
    }
    return out;
}

Json to_json(const ModelParams& p) {
    return Json{{"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}, {"delta", p.delta}};
}

Json to_json(const FitResult& fit) {
    Json j;
    j["theta_hat"] = to_json(fit.theta_hat);
    j["ql"] = fit.ql;
    j["converged"] = fit.converged;
    j["stop_reason"] = fit.stop_reason;
    j["iterations"] = fit.iterations;
    j["mode"] = std::string(to_string(fit.mode));
    j["epsilon"] = fit.epsilon;
    j["constraint_active"] = fit.constraint_active;
    j["lyapunov_sum"] = fit.lyapunov_sum;
    j["penalty_rounds"] = fit.penalty_rounds;
    j["used_fallback"] = fit.used_fallback;
    j["feasibility_search"] = fit.feasibility_search;
    j["n"] = fit.n;
    j["start"] = Json{{"relative", fit.start.relative}, {"value", fit.start.value}};
    Json cov = Json::array();
    for (Eigen::Index r = 0; r < 4; ++r) {
        for (Eigen::Index c = 0; c < 4; ++c) {
            cov.push_back(fit.cov(r, c));
        }
    }
    j["cov_valid"] = fit.cov_valid;
    j["cov"] = cov;
    j["std_errors"] = vec_json(fit.std_errors);
    j["m4_hat"] = fit.m4_hat;
    j["mm_stat"] = fit.mm_stat;
    j["mm_violated"] = fit.mm_violated;
    if (!fit.cov_message.empty()) {
        j["cov_message"] = fit.cov_message;
    }
    return j;
}

Json to_json(const LyapunovReport& report) {
    Json j;
    j["method"] = std::string(to_string(report.method));
    j["verdict"] = std::string(to_string(report.verdict));
    j["estimate"] = report.estimate;
    j["std_error"] = report.std_error;
    j["n_terms"] = report.n_terms;
    if (report.method == LyapunovMethod::Empirical) {
        j["sum"] = report.sum;
        j["epsilon"] = report.epsilon;
    } else {
        j["z"] = report.z;
    }
    return j;
}

Json to_json(const MCStudyReport& report) {
    Json j;
    j["kind"] = report.kind;
    j["theta0"] = to_json(report.theta0);
    j["mode"] = std::string(to_string(report.mode));
    j["epsilon"] = report.epsilon;
    j["replications"] = report.replications;
    j["n_grid"] = report.n_grid;
    j["seed"] = report.seed;
    j["replication_seeds"] = report.replication_seeds;
    Json cells = Json::array();
    for (const StudyCell& c : report.cells) {
        Json cj;
        cj["n"] = c.n;
        cj["attempted"] = c.attempted;
        cj["converged"] = c.converged;
        cj["with_se"] = c.with_se;
        cj["errors"] = c.errors;
        cj["constraint_active"] = c.constraint_active;
        cj["bias"] = array_json(c.bias);
        cj["rmse"] = array_json(c.rmse);
        cj["coverage95"] = array_json(c.coverage95);
        cj["standardized_var"] = array_json(c.standardized_var);
        cj["within_3se_all"] = c.within_3se_all;
        cj["forecast_mae"] = c.forecast_mae;
        cj["forecast_median_abs_err"] = c.forecast_median_abs_err;
        cj["mean_m4"] = c.mean_m4;
        cj["mean_mm_stat"] = c.mean_mm_stat;
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    j["rmse_decreasing"] = bool_array_json(report.rmse_decreasing);
    j["rmse_monotone"] = bool_array_json(report.rmse_monotone);
    j["forecast_decreasing"] = report.forecast_decreasing;
    return j;
}

Json to_json(const DomainGrid& grid) {
    Json j;
    j["gamma_axis"] = grid.gamma_axis;
    j["delta_axis"] = grid.delta_axis;
    Json rows = Json::array();
    for (const auto& row : grid.beta_max) {
        Json r = Json::array();
        for (const auto& v : row) {
            r.push_back(v ? Json(*v) : Json(nullptr));
        }
        rows.push_back(std::move(r));
    }
    j["beta_max"] = std::move(rows);
    j["mc_paths"] = grid.mc_paths;
    j["seed"] = grid.seed;
    j["beta_tolerance"] = grid.beta_tolerance;
    return j;
}

ModelParams params_from_json(const Json& j) {
    if (!j.is_object()) {
        throw Error(ErrorKind::ParseError, "parameter JSON must be an object");
    }
    const Json& src = j.contains("theta_hat") ? j.at("theta_hat") : j;
    if (!src.is_object()) {
        throw Error(ErrorKind::ParseError, "'theta_hat' must be an object");
    }
    return {number_field(src, "alpha"), number_field(src, "beta"), number_field(src, "gamma"),
            number_field(src, "delta")};
}

ModelParams load_params(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
    }
    return params_from_json(j);
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw Error(ErrorKind::Io, "error while writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::Io, "cannot move '" + tmp.string() + "' to '" + path.string() + "'");
    }
}

}  // namespace egarch::io
