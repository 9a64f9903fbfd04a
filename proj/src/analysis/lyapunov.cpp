#include <algorithm>
#include <array>
#include <cmath>

#include "propsim/dynamics.hpp"
#include "propsim/error.hpp"
#include "propsim/regime.hpp"

namespace propsim {

namespace {

constexpr double kScaleFloor = 1e-12;

std::array<double, 3> coords(const FundState& s) {
    return {s.capital, s.avg_maturity, s.implied};
}

double separation(const FundState& ref, const FundState& other) {
    const auto a = coords(ref);
    const auto b = coords(other);
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double rel = (b[k] - a[k]) / std::max(std::abs(a[k]), kScaleFloor);
        sum += rel * rel;
    }
    return std::sqrt(sum);
}

}  // namespace

LyapunovResult lyapunov_estimate(const Scenario& scenario, double epsilon,
                                 std::optional<std::size_t> max_steps) {
    scenario.validate();
    if (!(epsilon > 0) || !std::isfinite(epsilon)) {
        throw Error(ErrorCode::RangeError, "epsilon must be > 0", "epsilon");
    }
    const auto& p = scenario.params;
    const double eps_deg = scenario.guards.eps_deg;
    const std::size_t limit = std::min(scenario.horizon, max_steps.value_or(scenario.horizon));

    FundState ref = scenario.initial_state();
    FundState pert = ref;
    pert.capital = ref.capital + epsilon * std::abs(ref.capital);
    pert.vega = p.kappa * pert.capital;
    double base_sep = separation(ref, pert);

    LyapunovResult out;
    double log_sum = 0.0;
    for (std::size_t i = 0; i < limit; ++i) {
        const double r = scenario.realized.at(i);
        StepResult ref_next;
        StepResult pert_next;
        try {
            ref_next = step(ref, p, r, eps_deg);
        } catch (const Error& e) {
            if (i == 0 && e.code() == ErrorCode::DegenerateDenominator) throw;
            break;
        }
        const auto outcome = classify_step_outcome(scenario, ref_next.next);
        if (outcome.termination) break;
        try {
            pert_next = step(pert, p, r, eps_deg);
        } catch (const Error&) {
            break;
        }
        const double sep = separation(ref_next.next, pert_next.next);
        if (!(sep > 0) || !std::isfinite(sep)) break;

        log_sum += std::log(sep / base_sep);
        ++out.steps;

        // Pull the perturbed state back to distance epsilon along the
        // current separation direction.
        ref = ref_next.next;
        const double shrink = epsilon / sep;
        pert.t = ref.t;
        pert.capital = ref.capital + (pert_next.next.capital - ref.capital) * shrink;
        pert.avg_maturity =
            ref.avg_maturity + (pert_next.next.avg_maturity - ref.avg_maturity) * shrink;
        pert.implied = ref.implied + (pert_next.next.implied - ref.implied) * shrink;
        pert.vega = p.kappa * pert.capital;
        base_sep = separation(ref, pert);
        if (!(base_sep > 0)) break;
    }
    out.exponent = out.steps == 0 ? 0.0 : log_sum / (static_cast<double>(out.steps) * p.dt);
    return out;
}

}  // namespace propsim
