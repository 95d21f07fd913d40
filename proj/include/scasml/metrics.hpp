#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace scasml {

struct Metrics {
    double rel_l2 = 0.0;
    double l_inf = 0.0;
    double l1 = 0.0;
};

/// rel_l2 = |p - r|_2 / |r|_2, l_inf = max |p - r|, l1 = mean |p - r|.
inline Metrics evaluate_metrics(std::span<const double> preds, std::span<const double> refs) {
    if (preds.size() != refs.size()) {
        throw std::invalid_argument("evaluate_metrics: length mismatch");
    }
    if (preds.empty()) throw std::invalid_argument("evaluate_metrics: empty input");
    double err2 = 0.0, ref2 = 0.0, worst = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double e = preds[i] - refs[i];
        err2 += e * e;
        ref2 += refs[i] * refs[i];
        worst = std::max(worst, std::abs(e));
        abs_sum += std::abs(e);
    }
    if (ref2 == 0.0) {
        throw std::invalid_argument("evaluate_metrics: rel_l2 undefined for all-zero reference");
    }
    return {std::sqrt(err2) / std::sqrt(ref2), worst, abs_sum / static_cast<double>(preds.size())};
}

/// One benchmark record, mirroring the report schema.
struct MetricsRow {
    std::string problem;
    int dim = 0;
    std::string method;  // SR | MLP | SCaSML
    double time_s = 0.0;
    double rel_l2 = 0.0;
    double l_inf = 0.0;
    double l1 = 0.0;
    std::uint64_t seed = 0;
    std::string config;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

enum class ReportFormat { csv, jsonl };

inline constexpr const char* kReportHeader = "problem,dim,method,time_s,rel_l2,l_inf,l1,seed,config";

namespace detail {

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::runtime_error("report: cannot parse real '" + s + "'");
    }
    return v;
}

inline void check_field(const std::string& s) {
    if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos) {
        throw std::invalid_argument("report: field may not contain commas or newlines: " + s);
    }
}

}  // namespace detail

inline void emit_report(std::span<const MetricsRow> rows, const std::string& path,
                        ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_report: cannot open " + path);
    if (format == ReportFormat::csv) {
        out << kReportHeader << '\n';
        for (const auto& row : rows) {
            detail::check_field(row.problem);
            detail::check_field(row.method);
            detail::check_field(row.config);
            out << row.problem << ',' << row.dim << ',' << row.method << ','
                << detail::format_double(row.time_s) << ',' << detail::format_double(row.rel_l2)
                << ',' << detail::format_double(row.l_inf) << ',' << detail::format_double(row.l1)
                << ',' << row.seed << ',' << row.config << '\n';
        }
    } else {
        for (const auto& row : rows) {
            nlohmann::json obj;
            obj["problem"] = row.problem;
            obj["dim"] = row.dim;
            obj["method"] = row.method;
            obj["time_s"] = row.time_s;
            obj["rel_l2"] = row.rel_l2;
            obj["l_inf"] = row.l_inf;
            obj["l1"] = row.l1;
            obj["seed"] = row.seed;
            obj["config"] = row.config;
            out << obj.dump() << '\n';
        }
    }
    if (!out) throw std::runtime_error("emit_report: write failed for " + path);
}

inline std::vector<MetricsRow> read_report(const std::string& path, ReportFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_report: cannot open " + path);
    std::vector<MetricsRow> rows;
    std::string line;
    if (format == ReportFormat::csv) {
        if (!std::getline(in, line) || line != kReportHeader) {
            throw std::runtime_error("read_report: bad header in " + path);
        }
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> fields;
            std::stringstream ss(line);
            std::string field;
            for (int i = 0; i < 8; ++i) {
                if (!std::getline(ss, field, ',')) {
                    throw std::runtime_error("read_report: short row in " + path);
                }
                fields.push_back(field);
            }
            std::getline(ss, field);  // config: everything after the 8th comma
            fields.push_back(field);
            MetricsRow row;
            row.problem = fields[0];
            row.dim = std::stoi(fields[1]);
            row.method = fields[2];
            row.time_s = detail::parse_double(fields[3]);
            row.rel_l2 = detail::parse_double(fields[4]);
            row.l_inf = detail::parse_double(fields[5]);
            row.l1 = detail::parse_double(fields[6]);
            row.seed = std::stoull(fields[7]);
            row.config = fields[8];
            rows.push_back(std::move(row));
        }
    } else {
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto obj = nlohmann::json::parse(line);
            MetricsRow row;
            row.problem = obj.at("problem").get<std::string>();
            row.dim = obj.at("dim").get<int>();
            row.method = obj.at("method").get<std::string>();
            row.time_s = obj.at("time_s").get<double>();
            row.rel_l2 = obj.at("rel_l2").get<double>();
            row.l_inf = obj.at("l_inf").get<double>();
            row.l1 = obj.at("l1").get<double>();
            row.seed = obj.at("seed").get<std::uint64_t>();
            row.config = obj.at("config").get<std::string>();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

/// Least-squares slope of log(err) against log(size); the convergence-rate
/// fit. Requires at least three sizes.
inline double fit_log_slope(std::span<const double> sizes, std::span<const double> errors) {
    if (sizes.size() != errors.size()) throw std::invalid_argument("fit_log_slope: length mismatch");
    if (sizes.size() < 3) {
        throw std::invalid_argument("fit_log_slope: need at least three sizes to fit a rate");
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const auto n = static_cast<double>(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (!(sizes[i] > 0.0) || !(errors[i] > 0.0)) {
            throw std::invalid_argument("fit_log_slope: sizes and errors must be positive");
        }
        const double lx = std::log(sizes[i]);
        const double ly = std::log(errors[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace scasml
