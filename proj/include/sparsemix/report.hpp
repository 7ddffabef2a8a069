#pragma once

// Serialization of calibration and experiment results: CriticalValueTable as
// JSON, size tables and power curves as CSV, power curves as SVG charts.

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sparsemix/calibration.hpp"
#include "sparsemix/error.hpp"
#include "sparsemix/experiments.hpp"

namespace sparsemix {

inline constexpr std::string_view kVersion = "1.0.0";

/// %.6g, the precision used for every CSV float.
inline std::string format_g6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

inline void to_json(nlohmann::ordered_json& j, const CriticalValueTable& table) {
    j = nlohmann::ordered_json::object();
    j["kind"] = std::string(to_string(table.kind));
    j["n"] = table.n;
    j["method"] = std::string(to_string(table.method));
    j["R"] = table.replicates ? nlohmann::ordered_json(*table.replicates) : nlohmann::ordered_json(nullptr);
    j["master_seed"] = table.master_seed ? nlohmann::ordered_json(*table.master_seed) : nlohmann::ordered_json(nullptr);
    auto entries = nlohmann::ordered_json::array();
    for (const auto& e : table.entries) entries.push_back({{"alpha", e.alpha}, {"cv", e.cv}});
    j["entries"] = std::move(entries);
}

inline void from_json(const nlohmann::ordered_json& j, CriticalValueTable& table) {
    try {
        const auto kind = parse_statistic(j.at("kind").get<std::string>());
        const auto method = parse_method(j.at("method").get<std::string>());
        require(kind.has_value(), ErrorCode::ConfigError, "unknown statistic in table");
        require(method.has_value(), ErrorCode::ConfigError, "unknown method in table");
        table.kind = *kind;
        table.method = *method;
        table.n = j.at("n").get<std::size_t>();
        table.replicates = j.at("R").is_null() ? std::nullopt : std::optional(j.at("R").get<std::size_t>());
        table.master_seed = j.at("master_seed").is_null() ? std::nullopt
                                                           : std::optional(j.at("master_seed").get<std::uint64_t>());
        table.entries.clear();
        for (const auto& e : j.at("entries"))
            table.entries.push_back({e.at("alpha").get<double>(), e.at("cv").get<double>()});
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorCode::ConfigError, std::string("malformed critical value table: ") + ex.what());
    }
    table.validate();
}

inline void write_comment_header(std::ostream& out, std::string_view provenance) {
    if (provenance.empty()) return;
    std::istringstream lines{std::string(provenance)};
    for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
}

/// Columns n,kind,method,alpha,size,R,seed. Optional provenance lines go
/// first, each prefixed with "# ".
inline void write_size_csv(std::ostream& out, const std::vector<SizeTableRow>& rows,
                           std::string_view provenance = {}) {
    write_comment_header(out, provenance);
    out << "n,kind,method,alpha,size,R,seed\n";
    for (const auto& r : rows) {
        out << r.n << ',' << to_string(r.kind) << ',' << to_string(r.method) << ',' << format_g6(r.nominal_alpha)
            << ',' << format_g6(r.realized_size) << ',' << r.replicates << ',' << r.master_seed << '\n';
    }
}

/// Columns beta,kind,power,n,R_cal,R_pow,cv,seed.
inline void write_power_csv(std::ostream& out, const std::vector<PowerCurvePoint>& points,
                            std::string_view provenance = {}) {
    write_comment_header(out, provenance);
    out << "beta,kind,power,n,R_cal,R_pow,cv,seed\n";
    for (const auto& p : points) {
        out << format_g6(p.beta) << ',' << to_string(p.kind) << ',' << format_g6(p.power) << ',' << p.n << ','
            << p.cal_replicates << ',' << p.power_replicates << ',' << format_g6(p.cv_used) << ',' << p.master_seed
            << '\n';
    }
}

/// Parses what write_power_csv produced; '#' lines are skipped.
inline std::vector<PowerCurvePoint> read_power_csv(std::istream& in) {
    std::vector<PowerCurvePoint> points;
    bool header_seen = false;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            require(line == "beta,kind,power,n,R_cal,R_pow,cv,seed", ErrorCode::IoError,
                    "unexpected power CSV header: " + line);
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::istringstream cells(line);
        for (std::string cell; std::getline(cells, cell, ',');) fields.push_back(cell);
        require(fields.size() == 8, ErrorCode::IoError, "power CSV row needs 8 fields: " + line);
        const auto kind = parse_statistic(fields[1]);
        require(kind.has_value(), ErrorCode::IoError, "unknown statistic in power CSV: " + fields[1]);
        try {
            points.push_back({std::stod(fields[0]), *kind, std::stod(fields[2]), std::stoull(fields[3]),
                              std::stoull(fields[4]), std::stoull(fields[5]), std::stod(fields[6]),
                              std::stoull(fields[7])});
        } catch (const std::exception&) {
            fail(ErrorCode::IoError, "unparsable power CSV row: " + line);
        }
    }
    require(header_seen, ErrorCode::IoError, "power CSV has no header");
    return points;
}

/// Static 800x600 line chart of power against beta, one polyline per
/// statistic: ALR solid, HC dashed, BJ dash-dot.
inline std::string render_power_svg(const std::vector<PowerCurvePoint>& points) {
    constexpr double width = 800, height = 600;
    constexpr double left = 80, right = 40, top = 50, bottom = 70;
    constexpr double plot_w = width - left - right, plot_h = height - top - bottom;

    std::vector<double> betas;
    for (const auto& p : points) betas.push_back(p.beta);
    std::sort(betas.begin(), betas.end());
    betas.erase(std::unique(betas.begin(), betas.end()), betas.end());
    const double lo = betas.empty() ? 0.5 : betas.front();
    const double hi = betas.empty() ? 1.0 : betas.back();
    const double span = hi > lo ? hi - lo : 1.0;
    auto x_of = [&](double beta) { return left + (betas.size() > 1 ? (beta - lo) / span : 0.5) * plot_w; };
    auto y_of = [&](double power) { return top + (1.0 - std::clamp(power, 0.0, 1.0)) * plot_h; };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" width=\"800\" height=\"600\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
    std::string title = "Power vs sparsity";
    if (!points.empty()) title += " (n = " + std::to_string(points.front().n) + ")";
    svg << "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">" << title
        << "</text>\n";
    // Axes.
    svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + plot_h) << "\" x2=\"" << fmt(left + plot_w)
        << "\" y2=\"" << fmt(top + plot_h) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(left) << "\" y2=\""
        << fmt(top + plot_h) << "\" stroke=\"black\"/>\n";
    for (double beta : betas) {
        const double x = x_of(beta);
        svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(top + plot_h) << "\" x2=\"" << fmt(x) << "\" y2=\""
            << fmt(top + plot_h + 6) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(top + plot_h + 22)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << format_g6(beta)
            << "</text>\n";
    }
    for (int k = 0; k <= 10; ++k) {
        const double power = k / 10.0;
        const double y = y_of(power);
        svg << "<line x1=\"" << fmt(left - 6) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(left) << "\" y2=\""
            << fmt(y) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << fmt(left - 10) << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << format_g6(power)
            << "</text>\n";
    }
    svg << "<text x=\"" << fmt(left + plot_w / 2) << "\" y=\"" << fmt(height - 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">beta</text>\n";
    svg << "<text x=\"20\" y=\"" << fmt(top + plot_h / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"14\" transform=\"rotate(-90 20 " << fmt(top + plot_h / 2) << ")\">power</text>\n";

    int legend_row = 0;
    for (auto kind : kAllStatistics) {
        std::vector<const PowerCurvePoint*> series;
        for (const auto& p : points)
            if (p.kind == kind) series.push_back(&p);
        if (series.empty()) continue;
        std::stable_sort(series.begin(), series.end(),
                         [](const PowerCurvePoint* a, const PowerCurvePoint* b) { return a->beta < b->beta; });
        const char* dash = kind == StatisticKind::HC ? " stroke-dasharray=\"8 5\""
                           : kind == StatisticKind::BJ ? " stroke-dasharray=\"10 4 2 4\""
                                                       : "";
        svg << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\"" << dash << " points=\"";
        for (std::size_t k = 0; k < series.size(); ++k)
            svg << (k ? " " : "") << fmt(x_of(series[k]->beta)) << ',' << fmt(y_of(series[k]->power));
        svg << "\"/>\n";
        const double ly = top + 15 + 20.0 * legend_row++;
        svg << "<line x1=\"" << fmt(left + 15) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(left + 55) << "\" y2=\""
            << fmt(ly) << "\" stroke=\"black\" stroke-width=\"2\"" << dash << "/>\n";
        svg << "<text x=\"" << fmt(left + 62) << "\" y=\"" << fmt(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << to_string(kind) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace sparsemix
