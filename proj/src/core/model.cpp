#include "propsim/model.hpp"

#include <cmath>
#include <string>

#include "propsim/error.hpp"

namespace propsim {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorCode::NoRootFound: return "NoRootFound";
        case ErrorCode::MaturityCollapse: return "MaturityCollapse";
        case ErrorCode::UndefinedCritical: return "UndefinedCritical";
        case ErrorCode::InvalidAxis: return "InvalidAxis";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::RangeError: return "RangeError";
        case ErrorCode::InvalidState: return "InvalidState";
    }
    return "Unknown";
}

std::string_view to_string(ImpactModel m) {
    return m == ImpactModel::Linear ? "linear" : "sqrt";
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::HorizonReached: return "HorizonReached";
        case Termination::Bankrupt: return "Bankrupt";
        case Termination::DegenerateDenominator: return "DegenerateDenominator";
        case Termination::MaturityCollapse: return "MaturityCollapse";
        case Termination::NumericalOverflow: return "NumericalOverflow";
    }
    return "Unknown";
}

std::optional<Termination> termination_from_string(std::string_view s) {
    for (auto t : {Termination::HorizonReached, Termination::Bankrupt,
                   Termination::DegenerateDenominator, Termination::MaturityCollapse,
                   Termination::NumericalOverflow}) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

namespace {

void require(bool ok, const char* field, const std::string& what) {
    if (!ok) throw Error(ErrorCode::RangeError, std::string(field) + ": " + what, field);
}

}  // namespace

void ModelParams::validate() const {
    require(std::isfinite(kappa) && kappa > 0, "kappa", "must be > 0");
    require(std::isfinite(lambda) && lambda >= 0, "lambda", "must be >= 0");
    require(std::isfinite(maturity) && maturity > 0, "T", "must be > 0");
    require(std::isfinite(dt) && dt > 0 && dt < maturity, "dt", "must satisfy 0 < dt < T");
}

RealizedPath RealizedPath::constant(double value) {
    RealizedPath p;
    p.constant_ = true;
    p.values_ = {value};
    return p;
}

RealizedPath RealizedPath::sequence(std::vector<double> values) {
    RealizedPath p;
    p.constant_ = false;
    p.values_ = std::move(values);
    return p;
}

double RealizedPath::at(std::size_t step) const {
    if (constant_) return values_.front();
    if (step >= values_.size()) {
        throw Error(ErrorCode::RangeError, "realized: sequence shorter than horizon", "realized");
    }
    return values_[step];
}

FundState Scenario::initial_state() const {
    return FundState{0.0, c0, initial_maturity(), sigma0, params.kappa * c0};
}

void Scenario::validate() const {
    params.validate();
    require(std::isfinite(c0) && c0 > 0, "c0", "must be > 0");
    require(std::isfinite(sigma0), "sigma0", "must be finite");
    const double m = initial_maturity();
    require(std::isfinite(m) && m > params.dt && m <= params.maturity, "m0",
            "must satisfy dt < m0 <= T");
    require(horizon >= 1, "horizon", "must be >= 1");
    for (double r : realized.values()) require(std::isfinite(r), "realized", "must be finite");
    require(realized.is_constant() || realized.length() >= horizon, "realized",
            "sequence shorter than horizon");
    require(guards.eps_deg >= 0, "guards.eps_deg", "must be >= 0");
    require(guards.overflow_cap > 0, "guards.overflow_cap", "must be > 0");
    require(guards.gap_threshold > 0, "guards.gap_threshold", "must be > 0");
    require(guards.peak_prominence >= 0, "guards.peak_prominence", "must be >= 0");
    require(guards.ruin_fraction >= 0 && guards.ruin_fraction < 1, "guards.ruin_fraction",
            "must satisfy 0 <= ruin_fraction < 1");
}

std::vector<double> Trajectory::capital_series() const {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s.capital);
    return out;
}

}  // namespace propsim
