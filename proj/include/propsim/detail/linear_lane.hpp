#pragma once

// Single-lane linear-impact step. Every vector kernel must perform exactly
// these operations in exactly this order so that lanes stay bit-identical
// to the scalar path.

namespace propsim::detail {

struct LaneOut {
    double capital;
    double avg_maturity;
    double implied;
    double realized_pnl;
    double implied_pnl;
    double total_pnl;
    double aged_vega;
    double new_vega;
    double trade;
    double denom_margin;
};

inline LaneOut linear_lane(double capital, double maturity_avg, double sigma, double realized,
                           double kappa, double lambda, double maturity_std, double dt) {
    LaneOut o;
    const double vega = kappa * capital;
    const double frac = (maturity_avg - dt) / maturity_avg;
    const double aged = vega * frac;
    const double margin = 1.0 - lambda * kappa * aged;
    const double realized_leg = vega / maturity_avg * (realized - sigma) * dt;
    const double impact_leg = vega * vega * frac * lambda * dt / maturity_avg;
    const double profit = (realized_leg + impact_leg) / margin;
    const double next_capital = capital + profit;
    const double next_vega = kappa * next_capital;
    const double trade = next_vega - aged;
    const double next_sigma = sigma + lambda * trade;
    o.capital = next_capital;
    o.avg_maturity = (aged * (maturity_avg - dt) + trade * maturity_std) / next_vega;
    o.implied = next_sigma;
    o.realized_pnl = realized_leg;
    o.implied_pnl = aged * (next_sigma - sigma);
    o.total_pnl = profit;
    o.aged_vega = aged;
    o.new_vega = next_vega;
    o.trade = trade;
    o.denom_margin = margin;
    return o;
}

}  // namespace propsim::detail
