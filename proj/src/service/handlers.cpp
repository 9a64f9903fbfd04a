#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "propsim/dynamics.hpp"
#include "propsim/error.hpp"
#include "propsim/regime.hpp"
#include "propsim/scenario_io.hpp"
#include "propsim/service.hpp"

namespace propsim::service {

using nlohmann::json;

namespace {

Response error_response(int status, std::string_view code, const std::string& field,
                        const std::string& message) {
    json body{{"error", {{"code", code}, {"field", field}, {"message", message}}}};
    return {status, body.dump()};
}

Response from_error(const Error& e) {
    return error_response(400, to_string(e.code()), e.field(), e.what());
}

json parse_body(std::string_view body) {
    try {
        auto doc = json::parse(body);
        if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "body must be a JSON object", "$");
        return doc;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string("malformed JSON: ") + e.what(), "$");
    }
}

/// Removes an API-only key from the body before scenario parsing.
std::optional<json> take(json& doc, const char* key) {
    if (!doc.contains(key)) return std::nullopt;
    json v = doc.at(key);
    doc.erase(key);
    return v;
}

json optional_index(const std::optional<std::size_t>& v) {
    return v ? json(*v) : json(nullptr);
}

json report_to_json(const RegimeReport& r) {
    json peaks = json::array();
    for (const auto& p : r.peaks) {
        peaks.push_back({{"step", p.step}, {"value", p.value}, {"prominence", p.prominence}});
    }
    json gaps = json::array();
    for (const auto& g : r.gaps) gaps.push_back({{"step", g.step}, {"rel_change", g.rel_change}});
    return {{"regime", to_string(r.regime)},
            {"termination", to_string(r.termination)},
            {"peaks", peaks},
            {"gaps", gaps},
            {"bankruptcy_step", optional_index(r.bankruptcy_step)},
            {"final_capital", r.final_capital}};
}

/// Uniform-stride subset of [0, count) with every event index kept.
std::vector<std::size_t> downsample_indices(std::size_t count, std::size_t limit,
                                            const std::set<std::size_t>& events) {
    std::set<std::size_t> keep;
    for (auto e : events) {
        if (e < count) keep.insert(e);
    }
    if (count == 0) return {};
    keep.insert(0);
    keep.insert(count - 1);
    const std::size_t budget = limit > keep.size() ? limit - keep.size() : 1;
    const std::size_t stride = std::max<std::size_t>(1, (count + budget - 1) / budget);
    for (std::size_t i = 0; i < count; i += stride) {
        if (keep.size() >= std::max(limit, std::size_t{2}) && !keep.contains(i)) break;
        keep.insert(i);
    }
    return {keep.begin(), keep.end()};
}

struct BudgetExceeded {
    double cells;
};

/// Parses axis objects. Throws BudgetExceeded before materializing a grid
/// larger than `budget` cells.
std::vector<AxisSpec> parse_axes(const json& axes, std::size_t budget) {
    if (!axes.is_array() || axes.empty() || axes.size() > 2) {
        throw Error(ErrorCode::SchemaError, "axes must be an array of one or two axis objects",
                    "axes");
    }
    std::vector<AxisSpec> out;
    double cells = 1.0;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const auto& a = axes[i];
        const std::string path = "axes[" + std::to_string(i) + "]";
        if (!a.is_object() || !a.contains("name") || !a.at("name").is_string()) {
            throw Error(ErrorCode::SchemaError, path + ": expected {name, lo, hi, count} or {name, values}",
                        path);
        }
        for (const auto& [key, _] : a.items()) {
            if (key != "name" && key != "lo" && key != "hi" && key != "count" && key != "values") {
                throw Error(ErrorCode::SchemaError, path + "." + key + ": unknown field",
                            path + "." + key);
            }
        }
        const auto name = a.at("name").get<std::string>();
        if (!is_sweep_axis(name)) {
            throw Error(ErrorCode::InvalidAxis, "unknown sweep axis '" + name + "'", path + ".name");
        }
        if (a.contains("values")) {
            const auto& v = a.at("values");
            if (!v.is_array() || v.empty()) {
                throw Error(ErrorCode::SchemaError, path + ".values: expected a non-empty array",
                            path + ".values");
            }
            AxisSpec spec{name, {}};
            for (const auto& x : v) {
                if (!x.is_number()) {
                    throw Error(ErrorCode::SchemaError, path + ".values: expected numbers",
                                path + ".values");
                }
                spec.values.push_back(x.get<double>());
            }
            cells *= static_cast<double>(spec.values.size());
            out.push_back(std::move(spec));
        } else {
            for (const char* k : {"lo", "hi", "count"}) {
                if (!a.contains(k) || !a.at(k).is_number()) {
                    throw Error(ErrorCode::SchemaError, path + "." + k + ": expected a number",
                                path + "." + k);
                }
            }
            const double count = a.at("count").get<double>();
            if (count < 1 || count != std::floor(count)) {
                throw Error(ErrorCode::SchemaError, path + ".count: expected a positive integer",
                            path + ".count");
            }
            cells *= count;
            if (cells > static_cast<double>(budget)) throw BudgetExceeded{cells};
            out.push_back(AxisSpec::linspace(name, a.at("lo").get<double>(),
                                             a.at("hi").get<double>(),
                                             static_cast<std::size_t>(count)));
        }
    }
    if (cells > static_cast<double>(budget)) throw BudgetExceeded{cells};
    return out;
}

}  // namespace

Response handle_simulate(std::string_view body, const Config& config) {
    try {
        json doc = parse_body(body);
        std::size_t limit = config.default_downsample;
        if (auto d = take(doc, "downsample")) {
            if (!d->is_number_integer() || d->get<long long>() < 2) {
                throw Error(ErrorCode::SchemaError, "downsample: expected an integer >= 2",
                            "downsample");
            }
            limit = d->get<std::size_t>();
        }
        const Scenario scenario = scenario_from_json(doc);
        const Trajectory traj = simulate(scenario);
        if (traj.steps() == 0 && traj.termination == Termination::DegenerateDenominator) {
            return error_response(422, "DegenerateDenominator", "c0",
                                  "profit equation is degenerate at the initial state");
        }
        const RegimeReport report = classify(traj);

        std::set<std::size_t> events;
        for (const auto& g : report.gaps) {
            events.insert(g.step);
            events.insert(g.step + 1);
        }
        for (const auto& p : report.peaks) events.insert(p.step);
        const auto idx = downsample_indices(traj.states.size(), limit, events);

        json series{{"index", json::array()}, {"t", json::array()},
                    {"capital", json::array()}, {"avg_maturity", json::array()},
                    {"implied", json::array()}, {"vega", json::array()}};
        json breakdowns{{"index", json::array()},        {"realized_pnl", json::array()},
                        {"implied_pnl", json::array()},  {"total_pnl", json::array()},
                        {"aged_vega", json::array()},    {"new_vega", json::array()},
                        {"trade", json::array()},        {"denom_margin", json::array()}};
        for (std::size_t i : idx) {
            const auto& s = traj.states[i];
            series["index"].push_back(i);
            series["t"].push_back(s.t);
            series["capital"].push_back(s.capital);
            series["avg_maturity"].push_back(s.avg_maturity);
            series["implied"].push_back(s.implied);
            series["vega"].push_back(s.vega);
            if (i < traj.breakdowns.size()) {
                const auto& b = traj.breakdowns[i];
                breakdowns["index"].push_back(i);
                breakdowns["realized_pnl"].push_back(b.realized_pnl);
                breakdowns["implied_pnl"].push_back(b.implied_pnl);
                breakdowns["total_pnl"].push_back(b.total_pnl);
                breakdowns["aged_vega"].push_back(b.aged_vega);
                breakdowns["new_vega"].push_back(b.new_vega);
                breakdowns["trade"].push_back(b.trade);
                breakdowns["denom_margin"].push_back(b.denom_margin);
            }
        }
        json out{{"scenario", scenario_to_json(scenario)},
                 {"termination", to_string(traj.termination)},
                 {"steps", traj.steps()},
                 {"first_negative_implied", optional_index(traj.first_negative_implied)},
                 {"report", report_to_json(report)},
                 {"series", series},
                 {"breakdowns", breakdowns}};
        return {200, out.dump()};
    } catch (const Error& e) {
        return from_error(e);
    }
}

Response handle_sweep(std::string_view body, const Config& config) {
    try {
        json doc = parse_body(body);
        auto axes_doc = take(doc, "axes");
        if (!axes_doc) throw Error(ErrorCode::SchemaError, "axes: missing required field", "axes");
        std::vector<AxisSpec> axes;
        try {
            axes = parse_axes(*axes_doc, config.cell_budget);
        } catch (const BudgetExceeded& b) {
            return error_response(413, "CellBudgetExceeded", "axes",
                                  std::to_string(static_cast<long long>(b.cells)) +
                                      " cells exceed the budget of " +
                                      std::to_string(config.cell_budget));
        }
        const Scenario base = scenario_from_json(doc);
        const RegimeMap map = sweep(base, axes, SweepOptions{config.sweep_threads, true});

        json axes_out = json::array();
        for (const auto& a : map.axes) axes_out.push_back({{"name", a.name}, {"values", a.values}});
        json cells_out = json::array();
        for (const auto& c : map.cells) {
            json peak = nullptr;
            if (!c.report.peaks.empty()) {
                peak = std::max_element(c.report.peaks.begin(), c.report.peaks.end(),
                                        [](const auto& a, const auto& b) { return a.value < b.value; })
                           ->value;
            }
            cells_out.push_back({{"coords", c.coords},
                                 {"regime", to_string(c.report.regime)},
                                 {"termination", to_string(c.report.termination)},
                                 {"final_capital", c.report.final_capital},
                                 {"peak_value", peak},
                                 {"peak_count", c.report.peaks.size()},
                                 {"gap_count", c.report.gaps.size()},
                                 {"bankruptcy_step", optional_index(c.report.bankruptcy_step)}});
        }
        json out{{"scenario", scenario_to_json(base)}, {"axes", axes_out}, {"cells", cells_out}};
        return {200, out.dump()};
    } catch (const Error& e) {
        return from_error(e);
    }
}

Response handle_critical(const std::multimap<std::string, std::string>& query) {
    try {
        for (const auto& [key, _] : query) {
            if (key != "kappa" && key != "lambda" && key != "maturity" && key != "dt") {
                throw Error(ErrorCode::SchemaError, key + ": unknown parameter", key);
            }
        }
        auto number = [&](const std::string& key) -> std::optional<double> {
            const auto it = query.find(key);
            if (it == query.end()) return std::nullopt;
            char* end = nullptr;
            const double v = std::strtod(it->second.c_str(), &end);
            if (it->second.empty() || *end != '\0') {
                throw Error(ErrorCode::SchemaError, key + ": expected a number", key);
            }
            return v;
        };
        const auto kappa = number("kappa");
        const auto lambda = number("lambda");
        if (!kappa) throw Error(ErrorCode::SchemaError, "kappa: missing required parameter", "kappa");
        if (!lambda) throw Error(ErrorCode::SchemaError, "lambda: missing required parameter", "lambda");
        ModelParams p;
        p.kappa = *kappa;
        p.lambda = *lambda;
        p.dt = number("dt").value_or(p.dt);
        const auto maturity = number("maturity");
        const auto cc = critical_capital(p, maturity);
        json out{{"kappa", p.kappa}, {"lambda", p.lambda}, {"approx", cc.approx}};
        if (maturity) {
            out["maturity"] = *maturity;
            out["dt"] = p.dt;
            out["exact"] = *cc.exact;
        }
        return {200, out.dump()};
    } catch (const Error& e) {
        return from_error(e);
    }
}

Response handle_lyapunov(std::string_view body) {
    try {
        json doc = parse_body(body);
        double epsilon = 1e-8;
        if (auto e = take(doc, "epsilon")) {
            if (!e->is_number()) throw Error(ErrorCode::SchemaError, "epsilon: expected a number", "epsilon");
            epsilon = e->get<double>();
        }
        std::optional<std::size_t> max_steps;
        if (auto m = take(doc, "max_steps")) {
            if (!m->is_number_integer() || m->get<long long>() < 1) {
                throw Error(ErrorCode::SchemaError, "max_steps: expected a positive integer",
                            "max_steps");
            }
            max_steps = m->get<std::size_t>();
        }
        const Scenario scenario = scenario_from_json(doc);
        LyapunovResult r;
        try {
            r = lyapunov_estimate(scenario, epsilon, max_steps);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DegenerateDenominator) {
                return error_response(422, "DegenerateDenominator", "c0", e.what());
            }
            throw;
        }
        json out{{"scenario", scenario_to_json(scenario)},
                 {"epsilon", epsilon},
                 {"exponent", r.exponent},
                 {"steps", r.steps}};
        return {200, out.dump()};
    } catch (const Error& e) {
        return from_error(e);
    }
}

Response handle_health() {
    return {200, R"({"status":"ok"})"};
}

}  // namespace propsim::service
