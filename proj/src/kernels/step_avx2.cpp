// Built with -mavx2 only (never -mfma): each lane must round exactly like
// detail::linear_lane.

#include <immintrin.h>

#include "propsim/detail/linear_lane.hpp"
#include "propsim/step_kernels.hpp"

namespace propsim::kernels {

void step_linear_avx2(const LaneInputs& in, const LaneOutputs& out) {
    const std::size_t n = in.capital.size();
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d capital = _mm256_loadu_pd(in.capital.data() + i);
        const __m256d m = _mm256_loadu_pd(in.avg_maturity.data() + i);
        const __m256d sigma = _mm256_loadu_pd(in.implied.data() + i);
        const __m256d r = _mm256_loadu_pd(in.realized.data() + i);
        const __m256d kappa = _mm256_loadu_pd(in.kappa.data() + i);
        const __m256d lambda = _mm256_loadu_pd(in.lambda.data() + i);
        const __m256d big_t = _mm256_loadu_pd(in.maturity.data() + i);
        const __m256d dt = _mm256_loadu_pd(in.dt.data() + i);

        const __m256d vega = _mm256_mul_pd(kappa, capital);
        const __m256d m_aged = _mm256_sub_pd(m, dt);
        const __m256d frac = _mm256_div_pd(m_aged, m);
        const __m256d aged = _mm256_mul_pd(vega, frac);
        const __m256d margin =
            _mm256_sub_pd(one, _mm256_mul_pd(_mm256_mul_pd(lambda, kappa), aged));
        const __m256d realized_leg =
            _mm256_mul_pd(_mm256_mul_pd(_mm256_div_pd(vega, m), _mm256_sub_pd(r, sigma)), dt);
        const __m256d impact_leg = _mm256_div_pd(
            _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(vega, vega), frac), lambda),
                          dt),
            m);
        const __m256d profit = _mm256_div_pd(_mm256_add_pd(realized_leg, impact_leg), margin);
        const __m256d next_capital = _mm256_add_pd(capital, profit);
        const __m256d next_vega = _mm256_mul_pd(kappa, next_capital);
        const __m256d trade = _mm256_sub_pd(next_vega, aged);
        const __m256d next_sigma = _mm256_add_pd(sigma, _mm256_mul_pd(lambda, trade));
        const __m256d next_m = _mm256_div_pd(
            _mm256_add_pd(_mm256_mul_pd(aged, m_aged), _mm256_mul_pd(trade, big_t)), next_vega);

        _mm256_storeu_pd(out.capital.data() + i, next_capital);
        _mm256_storeu_pd(out.avg_maturity.data() + i, next_m);
        _mm256_storeu_pd(out.implied.data() + i, next_sigma);
        _mm256_storeu_pd(out.realized_pnl.data() + i, realized_leg);
        _mm256_storeu_pd(out.implied_pnl.data() + i,
                         _mm256_mul_pd(aged, _mm256_sub_pd(next_sigma, sigma)));
        _mm256_storeu_pd(out.total_pnl.data() + i, profit);
        _mm256_storeu_pd(out.aged_vega.data() + i, aged);
        _mm256_storeu_pd(out.new_vega.data() + i, next_vega);
        _mm256_storeu_pd(out.trade.data() + i, trade);
        _mm256_storeu_pd(out.denom_margin.data() + i, margin);
    }
    for (; i < n; ++i) {
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
