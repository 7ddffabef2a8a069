#pragma once

// Command-line front end. run_cli() is the whole program minus argv
// handling, so tests can drive it in-process.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsemix/sparsemix.hpp"

namespace sparsemix::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kExitUnknown = 1;

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& text, const std::string& what) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    require(ec == std::errc() && ptr == end, ErrorCode::ConfigError, "bad " + what + ": '" + text + "'");
    return value;
}

inline std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    std::uint64_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    require(ec == std::errc() && ptr == end, ErrorCode::ConfigError, "bad " + what + ": '" + text + "'");
    return value;
}

inline std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(item, what));
    require(!out.empty(), ErrorCode::ConfigError, "empty " + what + " list");
    return out;
}

inline std::vector<StatisticKind> parse_kinds(const std::string& text) {
    std::vector<StatisticKind> out;
    for (const auto& item : split_list(text)) {
        if (item == "all") {
            out.assign(kAllStatistics.begin(), kAllStatistics.end());
            continue;
        }
        const auto kind = parse_statistic(item);
        require(kind.has_value(), ErrorCode::ConfigError, "unknown statistic '" + item + "'");
        out.push_back(*kind);
    }
    require(!out.empty(), ErrorCode::ConfigError, "no statistic given");
    return out;
}

inline std::vector<CalibrationMethod> parse_methods(const std::string& text) {
    std::vector<CalibrationMethod> out;
    for (const auto& item : split_list(text)) {
        const auto method = parse_method(item);
        require(method.has_value(), ErrorCode::ConfigError, "unknown method '" + item + "'");
        out.push_back(*method);
    }
    require(!out.empty(), ErrorCode::ConfigError, "no method given");
    return out;
}

/// Newline-delimited decimal numbers; blank lines are ignored.
inline std::vector<double> read_numbers(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::IoError, "cannot open '" + path + "'");
    std::vector<double> values;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        line.erase(0, line.find_first_not_of(" \t\r"));
        line.erase(line.find_last_not_of(" \t\r") + 1);
        if (line.empty()) continue;
        const std::string lower = [&] {
            std::string s = line;
            for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            return s;
        }();
        if (lower.find("nan") != std::string::npos || lower.find("inf") != std::string::npos)
            fail(ErrorCode::NonFinite, "non-finite value on line " + std::to_string(line_no));
        double value = 0.0;
        const auto* end = line.data() + line.size();
        const auto [ptr, ec] = std::from_chars(line.data(), end, value);
        require(ec == std::errc() && ptr == end, ErrorCode::IoError,
                "unparsable number on line " + std::to_string(line_no) + ": '" + line + "'");
        values.push_back(value);
    }
    return values;
}

/// Temp file in the target directory, then rename over the target.
inline void write_atomically(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
        out << contents;
        out.flush();
        require(static_cast<bool>(out), ErrorCode::IoError, "write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorCode::IoError, "cannot move output into '" + path + "'");
    }
}

inline void emit(const std::string& out_path, const std::string& contents, std::ostream& out) {
    if (out_path.empty() || out_path == "-")
        out << contents;
    else
        write_atomically(out_path, contents);
}

/// Effective configuration embedded in every output; output paths and the
/// thread count are left out since they never change the results.
struct Provenance {
    std::string command;
    std::vector<std::pair<std::string, std::string>> args;

    void add(const std::string& flag, const std::string& value) { args.emplace_back(flag, value); }

    Json config() const {
        Json j;
        j["command"] = command;
        Json a = Json::object();
        for (const auto& [flag, value] : args) a[flag] = value;
        j["args"] = std::move(a);
        return j;
    }

    /// "version ..." and "config {...}" lines for CSV comment headers.
    std::string text() const {
        return "sparsemix " + std::string(kVersion) + "\nconfig " + config().dump();
    }
};

/// Rebuilds an argument vector from an embedded config object.
inline std::vector<std::string> args_from_config(const Json& config) {
    std::vector<std::string> args{config.at("command").get<std::string>()};
    for (const auto& [flag, value] : config.at("args").items()) {
        args.push_back(flag);
        args.push_back(value.get<std::string>());
    }
    return args;
}

inline std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
    return out;
}

inline std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct Options {
    // stat
    std::string input;
    std::string input_kind = "pvalues";
    std::string stat = "all";
    // shared
    std::string n_list;
    std::string stat_list;
    std::string method = "empirical";
    std::string alpha_list;
    std::size_t reps = 100000;
    std::uint64_t seed = 0;
    std::string out;
    unsigned threads = 0;
    // size-table
    std::string alr_cv = "simulate";
    std::size_t alr_reps = 100000;
    // power-curve
    std::string beta_grid = "default";
    double alpha = 0.05;
    std::size_t cal_reps = 100000;
    std::size_t pow_reps = 10000;
    std::string svg;
    std::string sampler = "direct";
    // alr-limit
    std::string variant = "cal1";
    std::size_t n_for_l = 100000;
    std::size_t grid = kDefaultBridgeGrid;
    // plot
    std::string csv;
};

inline int run_stat(const Options& o, std::ostream& out) {
    require(o.input_kind == "pvalues" || o.input_kind == "observations", ErrorCode::ConfigError,
            "--input-kind must be pvalues or observations");
    std::vector<StatisticKind> kinds;
    if (o.stat == "all")
        kinds.assign(kAllStatistics.begin(), kAllStatistics.end());
    else
        kinds = parse_kinds(o.stat);

    auto raw = read_numbers(o.input);
    if (o.input_kind == "observations")
        for (auto& x : raw) x = pvalue(x);
    const auto sp = prepare(raw);

    Provenance prov{"stat", {}};
    prov.add("--input", o.input);
    prov.add("--input-kind", o.input_kind);
    prov.add("--stat", o.stat);

    Json j;
    j["version"] = std::string(kVersion);
    j["config"] = prov.config();
    j["n"] = sp.n();
    for (auto kind : kinds) {
        const char* key = kind == StatisticKind::HC ? "hc" : kind == StatisticKind::BJ ? "bj" : "log_alr";
        if (kind == StatisticKind::ALR && sp.n() < kMinAlrSampleSize && o.stat == "all")
            j[key] = nullptr;
        else
            j[key] = compute(kind, sp).value;
    }
    out << j.dump(2) << '\n';
    return 0;
}

inline int run_calibrate(const Options& o, std::ostream& out) {
    const auto kinds = parse_kinds(o.stat_list);
    require(kinds.size() == 1, ErrorCode::ConfigError, "calibrate takes exactly one statistic");
    const auto methods = parse_methods(o.method);
    require(methods.size() == 1, ErrorCode::ConfigError, "calibrate takes exactly one method");
    const auto kind = kinds.front();
    const auto method = methods.front();
    const auto alphas = parse_doubles(o.alpha_list, "alpha");
    require(method_supports(method, kind), ErrorCode::IncompatibleMethod,
            std::string(to_string(method)) + " does not apply to " + std::string(to_string(kind)));

    Provenance prov{"calibrate", {}};
    prov.add("--stat", std::string(to_string(kind)));
    prov.add("--method", std::string(to_string(method)));
    prov.add("--alpha", o.alpha_list);
    prov.add("--seed", std::to_string(o.seed));

    CriticalValueTable table;
    if (method == CalibrationMethod::Empirical) {
        const auto n = parse_u64(o.n_list, "n");
        prov.add("--n", std::to_string(n));
        prov.add("--reps", std::to_string(o.reps));
        table = empirical_table(simulate_null_distribution(kind, n, o.reps, o.seed, {o.threads}), alphas);
    } else if (method == CalibrationMethod::Cal1 || method == CalibrationMethod::Cal2) {
        const auto variant = method == CalibrationMethod::Cal1 ? AlrLimitVariant::Cal1 : AlrLimitVariant::Cal2;
        prov.add("--reps", std::to_string(o.reps));
        if (variant == AlrLimitVariant::Cal2) {
            prov.add("--n-for-l", std::to_string(o.n_for_l));
            prov.add("--grid", std::to_string(o.grid));
        }
        table = alr_limit_table({variant, o.reps, o.n_for_l, o.grid, o.seed, o.threads}, alphas);
    } else {
        const auto n = parse_u64(o.n_list, "n");
        prov.add("--n", std::to_string(n));
        table = asymptotic_table(kind, n, method, alphas);
    }

    Json j = table;
    j["version"] = std::string(kVersion);
    j["config"] = prov.config();
    emit(o.out, j.dump(2) + "\n", out);
    return 0;
}

inline int run_size_table(const Options& o, std::ostream& out) {
    SizeTableConfig config;
    std::vector<std::string> n_text;
    for (const auto& item : split_list(o.n_list)) {
        config.ns.push_back(parse_u64(item, "n"));
        n_text.push_back(std::to_string(config.ns.back()));
    }
    config.kinds = parse_kinds(o.stat_list);
    config.methods = parse_methods(o.method);
    config.alphas = parse_doubles(o.alpha_list, "alpha");
    config.replicates = o.reps;
    config.master_seed = o.seed;
    config.threads = o.threads;
    require(o.alr_cv == "simulate" || o.alr_cv == "reference", ErrorCode::ConfigError,
            "--alr-cv must be simulate or reference");
    config.alr_limit_source = o.alr_cv == "reference" ? AlrLimitSource::Reference : AlrLimitSource::Simulate;
    config.alr_limit_replicates = o.alr_reps;
    config.n_for_l = o.n_for_l;
    config.bridge_grid = o.grid;

    std::vector<std::string> kind_text, method_text;
    for (auto k : config.kinds) kind_text.emplace_back(to_string(k));
    for (auto m : config.methods) method_text.emplace_back(to_string(m));
    Provenance prov{"size-table", {}};
    prov.add("--n", join(n_text));
    prov.add("--stat", join(kind_text));
    prov.add("--method", join(method_text));
    prov.add("--alpha", o.alpha_list);
    prov.add("--reps", std::to_string(o.reps));
    prov.add("--seed", std::to_string(o.seed));
    prov.add("--alr-cv", o.alr_cv);
    prov.add("--alr-reps", std::to_string(o.alr_reps));
    prov.add("--n-for-l", std::to_string(o.n_for_l));
    prov.add("--grid", std::to_string(o.grid));

    const auto rows = size_table(config);
    std::ostringstream csv;
    write_size_csv(csv, rows, prov.text());
    emit(o.out, csv.str(), out);
    return 0;
}

inline int run_power_curve(const Options& o, std::ostream& out) {
    PowerCurveConfig config;
    config.n = parse_u64(o.n_list, "n");
    if (o.beta_grid != "default") config.beta_grid = parse_doubles(o.beta_grid, "beta");
    config.kinds = parse_kinds(o.stat_list.empty() ? "all" : o.stat_list);
    config.alpha = o.alpha;
    config.cal_replicates = o.cal_reps;
    config.power_replicates = o.pow_reps;
    config.master_seed = o.seed;
    config.threads = o.threads;
    require(o.sampler == "direct" || o.sampler == "normal", ErrorCode::ConfigError,
            "--sampler must be direct or normal");
    config.path = o.sampler == "normal" ? SamplerPath::ViaNormal : SamplerPath::Direct;

    std::vector<std::string> kind_text;
    for (auto k : config.kinds) kind_text.emplace_back(to_string(k));
    Provenance prov{"power-curve", {}};
    prov.add("--n", std::to_string(config.n));
    prov.add("--beta-grid", o.beta_grid);
    prov.add("--stat", join(kind_text));
    prov.add("--alpha", g17(o.alpha));
    prov.add("--cal-reps", std::to_string(o.cal_reps));
    prov.add("--pow-reps", std::to_string(o.pow_reps));
    prov.add("--seed", std::to_string(o.seed));
    prov.add("--sampler", o.sampler);

    const auto points = power_curve(config);
    std::ostringstream csv;
    write_power_csv(csv, points, prov.text());
    emit(o.out, csv.str(), out);
    if (!o.svg.empty()) {
        // Render from the CSV text so the chart is a function of the file.
        std::istringstream back(csv.str());
        write_atomically(o.svg, render_power_svg(read_power_csv(back)));
    }
    return 0;
}

inline int run_alr_limit(const Options& o, std::ostream& out) {
    const auto variant = parse_variant(o.variant);
    require(variant.has_value(), ErrorCode::ConfigError, "--variant must be cal1 or cal2");
    const auto alphas = parse_doubles(o.alpha_list, "alpha");
    Provenance prov{"alr-limit", {}};
    prov.add("--variant", o.variant);
    prov.add("--reps", std::to_string(o.reps));
    prov.add("--alpha", o.alpha_list);
    if (*variant == AlrLimitVariant::Cal2) {
        prov.add("--n-for-l", std::to_string(o.n_for_l));
        prov.add("--grid", std::to_string(o.grid));
    }
    prov.add("--seed", std::to_string(o.seed));

    const auto table = alr_limit_table({*variant, o.reps, o.n_for_l, o.grid, o.seed, o.threads}, alphas);
    Json j;
    j["version"] = std::string(kVersion);
    j["config"] = prov.config();
    j["variant"] = o.variant;
    j["R"] = o.reps;
    auto entries = Json::array();
    for (const auto& e : table.entries)
        entries.push_back({{"alpha", e.alpha}, {"log_cv", e.cv}, {"cv", std::exp(e.cv)}});
    j["entries"] = std::move(entries);
    emit(o.out, j.dump(2) + "\n", out);
    return 0;
}

inline int run_plot(const Options& o, std::ostream& out) {
    std::ifstream in(o.csv);
    require(static_cast<bool>(in), ErrorCode::IoError, "cannot open '" + o.csv + "'");
    emit(o.svg, render_power_svg(read_power_csv(in)), out);
    return 0;
}

/// args excludes the program name. Returns the process exit status.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Sparse normal mixture detection: HC, BJ+ and ALR statistics with calibration", "sparsemix"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    auto* stat = app.add_subcommand("stat", "Compute statistics of a p-value or observation sample (JSON to stdout)");
    stat->add_option("--input", o.input, "Newline-delimited numbers")->required();
    stat->add_option("--input-kind", o.input_kind, "pvalues|observations");
    stat->add_option("--stat", o.stat, "hc|bj|alr|all");

    auto* calibrate = app.add_subcommand("calibrate", "Critical value table (JSON)");
    calibrate->add_option("--stat", o.stat_list, "hc|bj|alr")->required();
    calibrate->add_option("--n", o.n_list, "Sample size");
    calibrate->add_option("--method", o.method, "empirical|thresh|evi|evii|cal1|cal2");
    calibrate->add_option("--reps", o.reps, "Monte Carlo replicates");
    calibrate->add_option("--alpha", o.alpha_list, "Levels, comma separated")->required();
    calibrate->add_option("--seed", o.seed, "Master seed");
    calibrate->add_option("--n-for-l", o.n_for_l, "n inside L_n (cal2)");
    calibrate->add_option("--grid", o.grid, "Bridge grid intervals (cal2)");
    calibrate->add_option("--out", o.out, "Output path (stdout if omitted)");
    calibrate->add_option("--threads", o.threads, "Worker threads, 0 = auto");

    auto* size = app.add_subcommand("size-table", "Realized sizes of calibrated tests (CSV)");
    size->add_option("--n", o.n_list, "Sample sizes, comma separated")->required();
    size->add_option("--stat", o.stat_list, "Statistics, comma separated")->required();
    size->add_option("--method", o.method, "Methods, comma separated")->required();
    size->add_option("--alpha", o.alpha_list, "Levels, comma separated")->required();
    size->add_option("--reps", o.reps, "Null replicates per n");
    size->add_option("--seed", o.seed, "Master seed");
    size->add_option("--alr-cv", o.alr_cv, "simulate|reference: source of cal1/cal2 critical values");
    size->add_option("--alr-reps", o.alr_reps, "Limit-law draws when simulating cal1/cal2");
    size->add_option("--n-for-l", o.n_for_l, "n inside L_n (cal2)");
    size->add_option("--grid", o.grid, "Bridge grid intervals (cal2)");
    size->add_option("--out", o.out, "CSV path (stdout if omitted)");
    size->add_option("--threads", o.threads, "Worker threads, 0 = auto");

    auto* power = app.add_subcommand("power-curve", "Power against sparse alternatives (CSV, optional SVG)");
    power->add_option("--n", o.n_list, "Sample size")->required();
    power->add_option("--beta-grid", o.beta_grid, "default or comma separated betas");
    power->add_option("--stat", o.stat_list, "Statistics (default all)");
    power->add_option("--alpha", o.alpha, "Level");
    power->add_option("--cal-reps", o.cal_reps, "Null replicates for the critical values");
    power->add_option("--pow-reps", o.pow_reps, "Alternative replicates per beta");
    power->add_option("--seed", o.seed, "Master seed");
    power->add_option("--sampler", o.sampler, "direct|normal: p-value generation path");
    power->add_option("--out", o.out, "CSV path (stdout if omitted)");
    power->add_option("--svg", o.svg, "SVG chart path");
    power->add_option("--threads", o.threads, "Worker threads, 0 = auto");

    auto* limit = app.add_subcommand("alr-limit", "Limit-law critical values for ALR (JSON)");
    limit->add_option("--variant", o.variant, "cal1|cal2")->required();
    limit->add_option("--reps", o.reps, "Draws");
    limit->add_option("--alpha", o.alpha_list, "Levels, comma separated")->required();
    limit->add_option("--n-for-l", o.n_for_l, "n inside L_n (cal2)");
    limit->add_option("--grid", o.grid, "Bridge grid intervals (cal2)");
    limit->add_option("--seed", o.seed, "Master seed");
    limit->add_option("--out", o.out, "Output path (stdout if omitted)");
    limit->add_option("--threads", o.threads, "Worker threads, 0 = auto");

    auto* plot = app.add_subcommand("plot", "Render a power-curve CSV as SVG");
    plot->add_option("--csv", o.csv, "Power CSV")->required();
    plot->add_option("--svg", o.svg, "SVG path (stdout if omitted)");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "sparsemix: ConfigError: " << e.what() << '\n';
        return static_cast<int>(ErrorCode::ConfigError);
    }

    try {
        if (stat->parsed()) return run_stat(o, out);
        if (calibrate->parsed()) {
            if (o.method == "empirical" || o.method == "thresh" || o.method == "evi" || o.method == "evii")
                require(!o.n_list.empty(), ErrorCode::ConfigError, "--n is required");
            return run_calibrate(o, out);
        }
        if (size->parsed()) return run_size_table(o, out);
        if (power->parsed()) return run_power_curve(o, out);
        if (limit->parsed()) return run_alr_limit(o, out);
        if (plot->parsed()) return run_plot(o, out);
    } catch (const Error& e) {
        err << "sparsemix: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        err << "sparsemix: " << e.what() << '\n';
        return kExitUnknown;
    }
    return kExitUnknown;
}

}  // namespace sparsemix::cli
