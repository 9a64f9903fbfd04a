#pragma once

#include <optional>

#include "propsim/model.hpp"

namespace propsim {

inline constexpr double kDefaultEpsDeg = 1e-10;

struct StepResult {
    FundState next;
    StepBreakdown breakdown;
    bool bankrupt = false;  ///< next.capital <= 0
};

struct CriticalCapital {
    double approx = 0.0;
    std::optional<double> exact;
};

/// 1 - lambda*kappa*aged_vega: the coefficient of the collected profit
/// equation. Vanishes exactly at the critical capital for the state's M.
double degeneracy_margin(const FundState& state, const ModelParams& params);

/// Closed-form profit under linear impact. Throws DegenerateDenominator when
/// |margin| <= eps_deg.
StepBreakdown solve_profit_linear(const FundState& state, const ModelParams& params,
                                  double realized, double eps_deg = kDefaultEpsDeg);

/// Profit under square-root impact, sigma' = sigma + lambda*sign(dV)*sqrt(|dV|).
/// The implicit equation is solved on [-C, 10C]; among several roots the one
/// with the smallest |profit| is returned. Throws NoRootFound.
StepBreakdown solve_profit_sqrt(const FundState& state, const ModelParams& params,
                                double realized);

/// Residual of the square-root profit equation at a trial profit.
double sqrt_profit_residual(const FundState& state, const ModelParams& params,
                            double realized, double profit);

/// One step of the proof-form system. Throws on solver failure and
/// MaturityCollapse (M' <= dt) unless the step bankrupts the fund.
StepResult step(const FundState& state, const ModelParams& params, double realized,
                double eps_deg = kDefaultEpsDeg);

/// Same step through the displayed closed-form recurrences (linear only),
/// with the implied-mark denominator taken as M - C*kappa^2*lambda*(M-dt).
FundState step_closed_form(const FundState& state, const ModelParams& params,
                           double realized, double eps_deg = kDefaultEpsDeg);

/// The uncorrected implied-mark recurrence as printed, kept for the erratum test.
double printed_implied_recurrence(const FundState& state, const ModelParams& params,
                                  double realized);

/// approx = 1/(lambda*kappa^2); exact = M/((M-dt)*lambda*kappa^2) when M is given.
/// Throws UndefinedCritical when lambda == 0.
CriticalCapital critical_capital(const ModelParams& params,
                                 std::optional<double> maturity = std::nullopt);

/// Runs step until the horizon or a termination condition. Deterministic.
Trajectory simulate(const Scenario& scenario);

struct StepOutcome {
    std::optional<Termination> termination;
    bool record = true;  ///< false when the state is not finite
};

/// Applies the termination guards to a freshly computed state. Shared by the
/// scalar simulator and the batched sweep path so both stop identically.
StepOutcome classify_step_outcome(const Scenario& scenario, const FundState& next);

}  // namespace propsim
