#include "propsim/cli.hpp"

#include <charconv>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "propsim/dynamics.hpp"
#include "propsim/error.hpp"
#include "propsim/scenario_io.hpp"
#include "propsim/service.hpp"

namespace propsim::cli {

using nlohmann::json;

namespace {

struct ScenarioFlags {
    std::string file;
    std::optional<double> c0, kappa, lambda, maturity, dt, sigma0, m0, realized;
    std::optional<long long> steps;
    std::optional<std::string> impact;
    std::optional<double> eps_deg, overflow_cap, gap_threshold, peak_prominence, ruin_fraction;

    void attach(CLI::App& app) {
        app.add_option("--scenario", file, "Scenario JSON file (flags override its values)");
        app.add_option("--c0", c0, "Initial capital (millions)");
        app.add_option("--kappa", kappa, "Target exposure fraction");
        app.add_option("--lambda", lambda, "Market impact, vol points per million vega");
        app.add_option("--maturity", maturity, "Standard maturity T (years)");
        app.add_option("--dt", dt, "Time step (years)");
        app.add_option("--sigma0", sigma0, "Initial implied mark (vol points)");
        app.add_option("--m0", m0, "Initial average maturity (defaults to T)");
        app.add_option("--realized", realized, "Constant realized mark (vol points)");
        app.add_option("--steps", steps, "Horizon in steps (default 1000)");
        app.add_option("--impact", impact, "Impact model")->check(CLI::IsMember({"linear", "sqrt"}));
        app.add_option("--eps-deg", eps_deg, "Degeneracy guard on the profit coefficient");
        app.add_option("--overflow-cap", overflow_cap, "Capital treated as unbounded (millions)");
        app.add_option("--gap-threshold", gap_threshold, "Relative one-step change counted as a gap");
        app.add_option("--peak-prominence", peak_prominence, "Peak prominence, fraction of max");
        app.add_option("--ruin-fraction", ruin_fraction, "Bankrupt at capital <= fraction * c0");
    }

    /// Flag values as a scenario JSON fragment.
    json overrides() const {
        json o = json::object();
        auto put = [&](const char* key, const std::optional<double>& v) {
            if (v) o[key] = *v;
        };
        put("c0", c0);
        put("kappa", kappa);
        put("lambda", lambda);
        put("T", maturity);
        put("dt", dt);
        put("sigma0", sigma0);
        put("m0", m0);
        put("realized", realized);
        if (steps) o["horizon"] = *steps;
        if (impact) o["impact_model"] = *impact;
        json g = json::object();
        auto put_guard = [&](const char* key, const std::optional<double>& v) {
            if (v) g[key] = *v;
        };
        put_guard("eps_deg", eps_deg);
        put_guard("overflow_cap", overflow_cap);
        put_guard("gap_threshold", gap_threshold);
        put_guard("peak_prominence", peak_prominence);
        put_guard("ruin_fraction", ruin_fraction);
        if (!g.empty()) o["guards"] = g;
        return o;
    }
};

json reference_defaults() {
    return {{"c0", 1000.0}, {"kappa", 0.1}, {"lambda", 0.05}, {"T", 5.0},
            {"dt", 0.01},   {"sigma0", 20.0}, {"realized", 20.0}, {"horizon", 1000}};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::size_t env_threads() {
    const char* v = std::getenv("PROPSIM_THREADS");
    if (!v || !*v) return 0;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    return (*end == '\0' && n > 0) ? static_cast<std::size_t>(n) : 0;
}

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string report_line(const RegimeReport& r) {
    json peaks = json::array();
    for (const auto& p : r.peaks) {
        peaks.push_back({{"step", p.step}, {"value", p.value}, {"prominence", p.prominence}});
    }
    json gaps = json::array();
    for (const auto& g : r.gaps) gaps.push_back({{"step", g.step}, {"rel_change", g.rel_change}});
    json j{{"regime", to_string(r.regime)},
           {"termination", to_string(r.termination)},
           {"peaks", peaks},
           {"gaps", gaps},
           {"bankruptcy_step", r.bankruptcy_step ? json(*r.bankruptcy_step) : json(nullptr)},
           {"final_capital", r.final_capital}};
    return j.dump();
}

volatile std::sig_atomic_t g_stop_requested = 0;
service::Server* g_server = nullptr;

extern "C" void handle_signal(int) {
    g_stop_requested = 1;
    if (g_server) g_server->stop();
}

}  // namespace

AxisSpec parse_axis(const std::string& text) {
    auto fail = [&](const std::string& what) -> Error {
        return Error(ErrorCode::SchemaError, "--axis " + text + ": " + what, "axis");
    };
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw fail("expected name=lo:hi:count or name=v1,v2");
    }
    const std::string name = text.substr(0, eq);
    const std::string rest = text.substr(eq + 1);
    if (!is_sweep_axis(name)) {
        throw Error(ErrorCode::InvalidAxis, "unknown sweep axis '" + name + "'", "axis");
    }
    auto to_double = [&](const std::string& s) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
            throw fail("bad number '" + s + "'");
        }
        return v;
    };
    if (rest.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(rest);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw fail("range axis needs lo:hi:count");
        const double count = to_double(parts[2]);
        if (count < 1 || count != std::floor(count)) throw fail("count must be a positive integer");
        return AxisSpec::linspace(name, to_double(parts[0]), to_double(parts[1]),
                                  static_cast<std::size_t>(count));
    }
    AxisSpec spec{name, {}};
    std::stringstream ss(rest);
    for (std::string p; std::getline(ss, p, ',');) spec.values.push_back(to_double(p));
    if (spec.values.empty()) throw fail("axis has no values");
    return spec;
}

ParseResult parse_args(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"propsim: constant-exposure fund propping-up simulator", "propsim"};
    app.require_subcommand(1);

    ScenarioFlags sim_flags, sweep_flags, crit_flags;
    Command cmd;
    std::vector<std::string> axis_texts;
    std::optional<double> cls_gap, cls_prom;
    std::string classify_in;

    auto* sim = app.add_subcommand("simulate", "Simulate one trajectory");
    sim_flags.attach(*sim);
    sim->add_option("--out", cmd.out, "Trajectory CSV output path");
    sim->add_option("--plot", cmd.plot, "Capital SVG output path");

    auto* cls = app.add_subcommand("classify", "Classify a trajectory CSV");
    cls->add_option("input,--in", classify_in, "Trajectory CSV")->required();
    cls->add_option("--gap-threshold", cls_gap, "Override the gap threshold");
    cls->add_option("--peak-prominence", cls_prom, "Override the peak prominence");

    auto* swp = app.add_subcommand("sweep", "Regime map over one or two parameters");
    sweep_flags.attach(*swp);
    swp->add_option("--axis", axis_texts, "name=lo:hi:count or name=v1,v2,... (1-2 axes)")
        ->required();
    swp->add_option("--out", cmd.out, "Regime map CSV output path")->required();

    auto* crit = app.add_subcommand("critical", "Critical capital for kappa and lambda");
    crit_flags.attach(*crit);

    auto* srv = app.add_subcommand("serve", "Run the explorer HTTP service");
    srv->add_option("--port", cmd.port, "Port (default 8080)")->check(CLI::Range(0, 65535));
    srv->add_option("--host", cmd.host, "Bind address (default 127.0.0.1)");
    srv->add_option("--static-dir", cmd.static_dir, "Directory of built UI assets served at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return {std::nullopt, 0};
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return {std::nullopt, 0};
    } catch (const CLI::ParseError& e) {
        err << "propsim: " << e.what() << "\n" << "Run with --help for usage.\n";
        return {std::nullopt, 2};
    }

    auto resolve = [&](const ScenarioFlags& flags, bool critical) -> std::optional<ParseResult> {
        json doc = reference_defaults();
        if (!flags.file.empty()) {
            try {
                doc = json::parse(read_file(flags.file));
            } catch (const std::exception& e) {
                err << "propsim: scenario file: " << e.what() << "\n";
                return ParseResult{std::nullopt, 1};
            }
            if (!doc.is_object()) {
                err << "propsim: scenario file must hold a JSON object\n";
                return ParseResult{std::nullopt, 1};
            }
        }
        const json over = flags.overrides();
        doc.merge_patch(over);
        try {
            cmd.scenario = scenario_from_json(doc);
        } catch (const Error& e) {
            if (critical && e.code() == ErrorCode::RangeError && e.field() == "lambda") {
                // lambda = 0 is meaningful here; critical reports UndefinedCritical.
                json relaxed = doc;
                relaxed["lambda"] = 1.0;
                cmd.scenario = scenario_from_json(relaxed);
                cmd.scenario.params.lambda = doc.value("lambda", 0.0);
                return std::nullopt;
            }
            const bool from_flag = over.contains(e.field()) ||
                                   (e.field().starts_with("guards.") && over.contains("guards"));
            err << "propsim: " << e.what() << "\n";
            return ParseResult{std::nullopt, from_flag || flags.file.empty() ? 2 : 1};
        }
        return std::nullopt;
    };

    if (sim->parsed()) {
        cmd.verb = Verb::Simulate;
        if (auto r = resolve(sim_flags, false)) return *r;
    } else if (cls->parsed()) {
        cmd.verb = Verb::Classify;
        cmd.input = classify_in;
        cmd.gap_threshold = cls_gap;
        cmd.peak_prominence = cls_prom;
    } else if (swp->parsed()) {
        cmd.verb = Verb::Sweep;
        if (auto r = resolve(sweep_flags, false)) return *r;
        if (axis_texts.size() > 2) {
            err << "propsim: sweep takes at most two --axis options\n";
            return {std::nullopt, 2};
        }
        try {
            for (const auto& a : axis_texts) cmd.axes.push_back(parse_axis(a));
        } catch (const std::exception& e) {
            err << "propsim: " << e.what() << "\n";
            return {std::nullopt, 2};
        }
        cmd.threads = env_threads();
    } else if (crit->parsed()) {
        cmd.verb = Verb::Critical;
        if (auto r = resolve(crit_flags, true)) return *r;
    } else if (srv->parsed()) {
        cmd.verb = Verb::Serve;
        cmd.threads = env_threads();
    }
    return {cmd, 0};
}

int execute(const Command& cmd, std::ostream& out, std::ostream& err) {
    try {
        switch (cmd.verb) {
            case Verb::Simulate: {
                const Trajectory traj = simulate(cmd.scenario);
                const RegimeReport rep = classify(traj);
                if (!cmd.out.empty()) write_file(cmd.out, serialize_trajectory_csv(traj));
                if (!cmd.plot.empty()) write_file(cmd.plot, render_capital_svg(traj));
                double peak = traj.states.front().capital;
                for (const auto& s : traj.states) peak = std::max(peak, s.capital);
                out << "termination=" << to_string(traj.termination) << " steps=" << traj.steps()
                    << " regime=" << to_string(rep.regime)
                    << " final_capital=" << csv_number(rep.final_capital)
                    << " max_capital=" << csv_number(peak) << " peaks=" << rep.peaks.size()
                    << " gaps=" << rep.gaps.size() << "\n";
                return 0;
            }
            case Verb::Classify: {
                const Trajectory traj = parse_trajectory_csv(read_file(cmd.input));
                Thresholds th{traj.scenario.guards.gap_threshold,
                              traj.scenario.guards.peak_prominence};
                if (cmd.gap_threshold) th.gap_threshold = *cmd.gap_threshold;
                if (cmd.peak_prominence) th.peak_prominence = *cmd.peak_prominence;
                out << report_line(classify(traj, th)) << "\n";
                return 0;
            }
            case Verb::Sweep: {
                const RegimeMap map = sweep(cmd.scenario, cmd.axes, SweepOptions{cmd.threads, true});
                std::string csv;
                for (const auto& a : map.axes) csv += a.name + ",";
                csv += "regime,termination,final_capital,peak_value,peak_count,gap_count,"
                       "bankruptcy_step\n";
                std::map<std::string, std::size_t> tally;
                for (const auto& c : map.cells) {
                    for (double v : c.coords) csv += csv_number(v) + ",";
                    double peak = 0.0;
                    for (const auto& p : c.report.peaks) peak = std::max(peak, p.value);
                    csv += std::string(to_string(c.report.regime)) + "," +
                           std::string(to_string(c.report.termination)) + "," +
                           csv_number(c.report.final_capital) + "," +
                           (c.report.peaks.empty() ? std::string() : csv_number(peak)) + "," +
                           std::to_string(c.report.peaks.size()) + "," +
                           std::to_string(c.report.gaps.size()) + "," +
                           (c.report.bankruptcy_step ? std::to_string(*c.report.bankruptcy_step)
                                                     : std::string()) +
                           "\n";
                    ++tally[std::string(to_string(c.report.regime))];
                }
                write_file(cmd.out, csv);
                out << "cells=" << map.cells.size();
                for (const auto& [name, n] : tally) out << " " << name << "=" << n;
                out << "\n";
                return 0;
            }
            case Verb::Critical: {
                const double m = cmd.scenario.initial_maturity();
                const auto cc = critical_capital(cmd.scenario.params, m);
                out << "approx=" << csv_number(cc.approx) << " exact=" << csv_number(*cc.exact)
                    << " (M=" << csv_number(m) << ", dt=" << csv_number(cmd.scenario.params.dt)
                    << ")\n";
                return 0;
            }
            case Verb::Serve: {
                service::Config cfg;
                cfg.static_dir = cmd.static_dir;
                cfg.sweep_threads = cmd.threads;
                service::Server server(cfg);
                g_server = &server;
                std::signal(SIGINT, handle_signal);
                std::signal(SIGTERM, handle_signal);
                out << "serving on http://" << cmd.host << ":" << cmd.port << "\n" << std::flush;
                const bool ok = server.listen(cmd.host, cmd.port);
                g_server = nullptr;
                if (!ok && !g_stop_requested) {
                    err << "propsim: cannot listen on " << cmd.host << ":" << cmd.port << "\n";
                    return 1;
                }
                return 0;
            }
        }
    } catch (const Error& e) {
        err << "propsim: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "propsim: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace propsim::cli
