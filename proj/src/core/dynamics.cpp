#include "propsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "propsim/detail/linear_lane.hpp"
#include "propsim/error.hpp"

namespace propsim {

namespace {

double signed_sqrt(double x) {
    return x < 0 ? -std::sqrt(-x) : std::sqrt(x);
}

detail::LaneOut run_lane(const FundState& s, const ModelParams& p, double realized) {
    return detail::linear_lane(s.capital, s.avg_maturity, s.implied, realized, p.kappa,
                               p.lambda, p.maturity, p.dt);
}

StepBreakdown to_breakdown(const detail::LaneOut& o) {
    return StepBreakdown{o.realized_pnl, o.implied_pnl, o.total_pnl, o.aged_vega,
                         o.new_vega,     o.trade,       o.denom_margin};
}

void check_margin(double margin, double eps_deg) {
    if (!(std::abs(margin) > eps_deg)) {
        throw Error(ErrorCode::DegenerateDenominator,
                    "profit equation coefficient " + std::to_string(margin) +
                        " is within eps_deg of zero");
    }
}

void check_state(const FundState& s, const ModelParams& p) {
    if (!(std::isfinite(s.capital) && std::isfinite(s.avg_maturity) &&
          std::isfinite(s.implied))) {
        throw Error(ErrorCode::InvalidState, "state has non-finite fields");
    }
    if (!(s.avg_maturity > p.dt)) {
        throw Error(ErrorCode::InvalidState, "average maturity must exceed dt", "avg_maturity");
    }
}

struct SqrtTerms {
    double vega;
    double aged;
    double realized_leg;
    double untraded;  // V - aged: trade size at zero profit
};

SqrtTerms sqrt_terms(const FundState& s, const ModelParams& p, double realized) {
    const double vega = p.kappa * s.capital;
    const double aged = vega * ((s.avg_maturity - p.dt) / s.avg_maturity);
    const double realized_leg = vega / s.avg_maturity * (realized - s.implied) * p.dt;
    return {vega, aged, realized_leg, vega - aged};
}

}  // namespace

double degeneracy_margin(const FundState& state, const ModelParams& params) {
    const double vega = params.kappa * state.capital;
    const double aged = vega * ((state.avg_maturity - params.dt) / state.avg_maturity);
    return 1.0 - params.lambda * params.kappa * aged;
}

StepBreakdown solve_profit_linear(const FundState& state, const ModelParams& params,
                                  double realized, double eps_deg) {
    check_state(state, params);
    const auto lane = run_lane(state, params, realized);
    check_margin(lane.denom_margin, eps_deg);
    return to_breakdown(lane);
}

double sqrt_profit_residual(const FundState& state, const ModelParams& params,
                            double realized, double profit) {
    const auto t = sqrt_terms(state, params, realized);
    return t.realized_leg +
           t.aged * params.lambda * signed_sqrt(t.untraded + params.kappa * profit) - profit;
}

StepBreakdown solve_profit_sqrt(const FundState& state, const ModelParams& params,
                                double realized) {
    check_state(state, params);
    const auto t = sqrt_terms(state, params, realized);
    const double lo = -state.capital;
    const double hi = 10.0 * state.capital;
    const double kappa = params.kappa;

    auto residual = [&](double profit) {
        return t.realized_leg + t.aged * params.lambda * signed_sqrt(t.untraded + kappa * profit) -
               profit;
    };

    std::vector<double> roots;
    if (params.lambda == 0.0 || t.aged == 0.0) {
        roots.push_back(t.realized_leg);
    } else {
        // The residual is monotone between the kink (zero trade) and the two
        // points where its slope vanishes, |dV| = (aged*lambda*kappa/2)^2.
        const double q = 0.5 * t.aged * params.lambda * kappa;
        std::vector<double> knots{lo, hi, -t.untraded / kappa, (q * q - t.untraded) / kappa,
                                  (-q * q - t.untraded) / kappa};
        std::erase_if(knots, [&](double x) { return !(x >= lo && x <= hi); });
        std::sort(knots.begin(), knots.end());
        knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

        std::vector<double> values;
        values.reserve(knots.size());
        for (double x : knots) values.push_back(residual(x));

        for (std::size_t i = 0; i < knots.size(); ++i) {
            if (values[i] == 0.0) roots.push_back(knots[i]);
            if (i + 1 == knots.size()) break;
            const double fa = values[i];
            const double fb = values[i + 1];
            if (fa == 0.0 || fb == 0.0 || std::signbit(fa) == std::signbit(fb)) continue;
            std::uintmax_t max_iter = 300;
            const auto [a, b] = boost::math::tools::toms748_solve(
                residual, knots[i], knots[i + 1], fa, fb,
                boost::math::tools::eps_tolerance<double>(), max_iter);
            roots.push_back(std::abs(residual(a)) <= std::abs(residual(b)) ? a : b);
        }
    }
    std::erase_if(roots, [&](double x) { return !(x >= lo && x <= hi); });
    if (roots.empty()) {
        throw Error(ErrorCode::NoRootFound, "square-root impact profit equation has no root in [-C, 10C]");
    }
    const double profit =
        *std::min_element(roots.begin(), roots.end(),
                          [](double x, double y) { return std::abs(x) < std::abs(y); });

    StepBreakdown bd;
    bd.realized_pnl = t.realized_leg;
    bd.total_pnl = profit;
    bd.aged_vega = t.aged;
    bd.new_vega = kappa * (state.capital + profit);
    bd.trade = bd.new_vega - t.aged;
    bd.implied_pnl = t.aged * (params.lambda * signed_sqrt(bd.trade));
    bd.denom_margin = 1.0 - params.lambda * kappa * t.aged;
    return bd;
}

StepResult step(const FundState& state, const ModelParams& params, double realized,
                double eps_deg) {
    StepResult r;
    if (params.impact == ImpactModel::Linear) {
        check_state(state, params);
        const auto lane = run_lane(state, params, realized);
        check_margin(lane.denom_margin, eps_deg);
        r.breakdown = to_breakdown(lane);
        r.next = FundState{state.t + params.dt, lane.capital, lane.avg_maturity, lane.implied,
                           lane.new_vega};
    } else {
        r.breakdown = solve_profit_sqrt(state, params, realized);
        const auto& bd = r.breakdown;
        const double capital = state.capital + bd.total_pnl;
        const double next_vega = params.kappa * capital;
        const double implied = state.implied + params.lambda * signed_sqrt(bd.trade);
        const double maturity_avg =
            (bd.aged_vega * (state.avg_maturity - params.dt) + bd.trade * params.maturity) /
            next_vega;
        r.next = FundState{state.t + params.dt, capital, maturity_avg, implied, next_vega};
    }
    r.bankrupt = r.next.capital <= 0.0;
    if (!r.bankrupt && r.next.avg_maturity <= params.dt) {
        throw Error(ErrorCode::MaturityCollapse, "average maturity fell to dt or below",
                    "avg_maturity");
    }
    return r;
}

FundState step_closed_form(const FundState& state, const ModelParams& params, double realized,
                           double eps_deg) {
    if (params.impact != ImpactModel::Linear) {
        throw Error(ErrorCode::InvalidState, "closed form exists for linear impact only",
                    "impact_model");
    }
    check_state(state, params);
    const double c = state.capital;
    const double m = state.avg_maturity;
    const double sigma = state.implied;
    const double k = params.kappa;
    const double lam = params.lambda;
    const double dt = params.dt;
    const double big_t = params.maturity;

    const double aged_m = m - dt;
    const double denom = m - c * k * k * lam * aged_m;
    check_margin(denom / m, eps_deg);

    const double capital = c + c * k * dt * (realized - sigma + c * k * lam * aged_m / m) / denom;
    const double maturity_avg =
        (m * big_t * dt * (k * (sigma - realized) - 1.0) - aged_m * aged_m * denom) /
        (c * k * k * lam * aged_m * aged_m - m * (m - k * dt * (sigma - realized)));
    const double implied = (sigma * m + c * k * lam * (dt - k * sigma * m + k * dt * realized)) / denom;
    return FundState{state.t + dt, capital, maturity_avg, implied, k * capital};
}

double printed_implied_recurrence(const FundState& state, const ModelParams& params,
                                  double realized) {
    const double c = state.capital;
    const double m = state.avg_maturity;
    const double sigma = state.implied;
    const double k = params.kappa;
    const double lam = params.lambda;
    const double dt = params.dt;
    return (sigma * m + c * k * lam * (dt - k * sigma * m + k * dt * realized)) /
           (c * k * k * lam * (m - dt) - m);
}

CriticalCapital critical_capital(const ModelParams& params, std::optional<double> maturity) {
    if (!(params.kappa > 0)) throw Error(ErrorCode::RangeError, "kappa must be > 0", "kappa");
    if (params.lambda == 0.0) {
        throw Error(ErrorCode::UndefinedCritical,
                    "no critical capital without market impact (lambda = 0)", "lambda");
    }
    if (!(params.lambda > 0)) throw Error(ErrorCode::RangeError, "lambda must be > 0", "lambda");
    CriticalCapital out;
    // Successive division keeps 1/(0.05 * 0.1^2) at exactly 2000.
    out.approx = 1.0 / params.lambda / params.kappa / params.kappa;
    if (maturity) {
        if (!(*maturity > params.dt)) {
            throw Error(ErrorCode::RangeError, "maturity must exceed dt", "maturity");
        }
        out.exact = *maturity / (*maturity - params.dt) / params.lambda / params.kappa /
                    params.kappa;
    }
    return out;
}

StepOutcome classify_step_outcome(const Scenario& scenario, const FundState& next) {
    if (!std::isfinite(next.capital)) return {Termination::NumericalOverflow, false};
    if (next.capital <= scenario.guards.ruin_fraction * scenario.c0) {
        return {Termination::Bankrupt, true};
    }
    if (!std::isfinite(next.avg_maturity) || !std::isfinite(next.implied)) {
        return {Termination::NumericalOverflow, false};
    }
    if (std::abs(next.capital) >= scenario.guards.overflow_cap) {
        return {Termination::NumericalOverflow, true};
    }
    return {};
}

Trajectory simulate(const Scenario& scenario) {
    scenario.validate();
    Trajectory traj;
    traj.scenario = scenario;
    traj.states.reserve(scenario.horizon + 1);
    traj.breakdowns.reserve(scenario.horizon);
    traj.states.push_back(scenario.initial_state());
    if (scenario.sigma0 < 0) traj.first_negative_implied = 0;

    for (std::size_t i = 0; i < scenario.horizon; ++i) {
        StepResult r;
        try {
            r = step(traj.states.back(), scenario.params, scenario.realized.at(i),
                     scenario.guards.eps_deg);
        } catch (const Error& e) {
            traj.termination = e.code() == ErrorCode::MaturityCollapse
                                   ? Termination::MaturityCollapse
                                   : Termination::DegenerateDenominator;
            return traj;
        }
        const auto outcome = classify_step_outcome(scenario, r.next);
        if (outcome.record) {
            traj.states.push_back(r.next);
            traj.breakdowns.push_back(r.breakdown);
            if (r.next.implied < 0 && !traj.first_negative_implied) {
                traj.first_negative_implied = traj.states.size() - 1;
            }
        }
        if (outcome.termination) {
            traj.termination = *outcome.termination;
            return traj;
        }
    }
    traj.termination = Termination::HorizonReached;
    return traj;
}

}  // namespace propsim
