#include "propsim/detail/linear_lane.hpp"
#include "propsim/step_kernels.hpp"

namespace propsim::kernels {

void step_linear_scalar(const LaneInputs& in, const LaneOutputs& out) {
    const std::size_t n = in.capital.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto o = detail::linear_lane(in.capital[i], in.avg_maturity[i], in.implied[i],
                                           in.realized[i], in.kappa[i], in.lambda[i],
                                           in.maturity[i], in.dt[i]);
        out.capital[i] = o.capital;
        out.avg_maturity[i] = o.avg_maturity;
        out.implied[i] = o.implied;
        out.realized_pnl[i] = o.realized_pnl;
        out.implied_pnl[i] = o.implied_pnl;
        out.total_pnl[i] = o.total_pnl;
        out.aged_vega[i] = o.aged_vega;
        out.new_vega[i] = o.new_vega;
        out.trade[i] = o.trade;
        out.denom_margin[i] = o.denom_margin;
    }
}

}  // namespace propsim::kernels
