#include <cmath>
#include <set>
#include <string>

#include "propsim/error.hpp"
#include "propsim/scenario_io.hpp"

namespace propsim {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::SchemaError, path + ": " + what, path);
}

double number_at(const json& obj, const char* key, const std::string& path) {
    const auto& v = obj.at(key);
    if (!v.is_number()) schema_error(path, "expected a number");
    return v.get<double>();
}

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& prefix) {
    for (const auto& [key, _] : obj.items()) {
        if (!known.contains(key)) schema_error(prefix + key, "unknown field");
    }
}

void require_keys(const json& obj, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        if (!obj.contains(k)) schema_error(k, "missing required field");
    }
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string("malformed JSON: ") + e.what());
    }
    return scenario_from_json(doc);
}

Scenario scenario_from_json(const json& doc) {
    if (!doc.is_object()) schema_error("$", "expected a JSON object");
    reject_unknown(doc,
                   {"c0", "kappa", "lambda", "T", "dt", "sigma0", "m0", "realized", "horizon",
                    "impact_model", "guards"},
                   "");
    require_keys(doc, {"c0", "kappa", "lambda", "T", "dt", "sigma0", "realized"});

    Scenario s;
    s.c0 = number_at(doc, "c0", "c0");
    s.params.kappa = number_at(doc, "kappa", "kappa");
    s.params.lambda = number_at(doc, "lambda", "lambda");
    s.params.maturity = number_at(doc, "T", "T");
    s.params.dt = number_at(doc, "dt", "dt");
    s.sigma0 = number_at(doc, "sigma0", "sigma0");
    s.m0 = doc.contains("m0") ? number_at(doc, "m0", "m0") : s.params.maturity;

    const auto& realized = doc.at("realized");
    if (realized.is_number()) {
        s.realized = RealizedPath::constant(realized.get<double>());
    } else if (realized.is_array()) {
        std::vector<double> values;
        values.reserve(realized.size());
        for (std::size_t i = 0; i < realized.size(); ++i) {
            if (!realized[i].is_number()) {
                schema_error("realized[" + std::to_string(i) + "]", "expected a number");
            }
            values.push_back(realized[i].get<double>());
        }
        s.realized = RealizedPath::sequence(std::move(values));
    } else {
        schema_error("realized", "expected a number or an array of numbers");
    }

    if (doc.contains("horizon")) {
        const auto& h = doc.at("horizon");
        if (!h.is_number()) schema_error("horizon", "expected an integer");
        const double v = h.get<double>();
        if (v != std::floor(v)) schema_error("horizon", "expected an integer");
        if (v < 1) throw Error(ErrorCode::RangeError, "horizon: must be >= 1", "horizon");
        s.horizon = static_cast<std::size_t>(v);
    }

    if (doc.contains("impact_model")) {
        const auto& m = doc.at("impact_model");
        if (!m.is_string()) schema_error("impact_model", "expected \"linear\" or \"sqrt\"");
        const auto name = m.get<std::string>();
        if (name == "linear") {
            s.params.impact = ImpactModel::Linear;
        } else if (name == "sqrt") {
            s.params.impact = ImpactModel::Sqrt;
        } else {
            schema_error("impact_model", "expected \"linear\" or \"sqrt\"");
        }
    }

    if (doc.contains("guards")) {
        const auto& g = doc.at("guards");
        if (!g.is_object()) schema_error("guards", "expected an object");
        reject_unknown(g,
                       {"eps_deg", "overflow_cap", "gap_threshold", "peak_prominence",
                        "ruin_fraction"},
                       "guards.");
        auto opt = [&](const char* key, double& slot) {
            if (g.contains(key)) slot = number_at(g, key, std::string("guards.") + key);
        };
        opt("eps_deg", s.guards.eps_deg);
        opt("overflow_cap", s.guards.overflow_cap);
        opt("gap_threshold", s.guards.gap_threshold);
        opt("peak_prominence", s.guards.peak_prominence);
        opt("ruin_fraction", s.guards.ruin_fraction);
    }

    s.validate();
    return s;
}

json scenario_to_json(const Scenario& s) {
    json doc;
    doc["c0"] = s.c0;
    doc["kappa"] = s.params.kappa;
    doc["lambda"] = s.params.lambda;
    doc["T"] = s.params.maturity;
    doc["dt"] = s.params.dt;
    doc["sigma0"] = s.sigma0;
    doc["m0"] = s.initial_maturity();
    if (s.realized.is_constant()) {
        doc["realized"] = s.realized.at(0);
    } else {
        doc["realized"] = std::vector<double>(s.realized.values().begin(), s.realized.values().end());
    }
    doc["horizon"] = s.horizon;
    doc["impact_model"] = std::string(to_string(s.params.impact));
    doc["guards"] = {
        {"eps_deg", s.guards.eps_deg},
        {"overflow_cap", s.guards.overflow_cap},
        {"gap_threshold", s.guards.gap_threshold},
        {"peak_prominence", s.guards.peak_prominence},
        {"ruin_fraction", s.guards.ruin_fraction},
    };
    return doc;
}

}  // namespace propsim
