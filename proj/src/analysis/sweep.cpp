#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "propsim/dynamics.hpp"
#include "propsim/error.hpp"
#include "propsim/regime.hpp"
#include "propsim/step_kernels.hpp"

namespace propsim {

namespace {

constexpr std::size_t kLanesPerChunk = 64;

Thresholds thresholds_of(const Scenario& s) {
    return {s.guards.gap_threshold, s.guards.peak_prominence};
}

struct LaneRun {
    std::vector<double> capital;
    Termination termination = Termination::HorizonReached;
};

/// Simulates a chunk of linear-impact scenarios in lockstep through the lane
/// kernel, mirroring simulate() step for step.
std::vector<LaneRun> run_lanes(const std::vector<Scenario>& scenarios) {
    const std::size_t n = scenarios.size();
    std::vector<LaneRun> runs(n);
    std::vector<FundState> state(n);
    std::vector<std::size_t> active;
    std::size_t horizon = 0;
    for (std::size_t i = 0; i < n; ++i) {
        state[i] = scenarios[i].initial_state();
        runs[i].capital.reserve(scenarios[i].horizon + 1);
        runs[i].capital.push_back(state[i].capital);
        active.push_back(i);
        horizon = std::max(horizon, scenarios[i].horizon);
    }

    std::vector<double> in_buf(8 * n), out_buf(10 * n);
    for (std::size_t step_i = 0; step_i < horizon && !active.empty(); ++step_i) {
        std::erase_if(active, [&](std::size_t i) {
            if (scenarios[i].horizon > step_i) return false;
            runs[i].termination = Termination::HorizonReached;
            return true;
        });
        const std::size_t m = active.size();
        if (m == 0) break;
        auto col_in = [&](std::size_t k) { return std::span<double>(in_buf.data() + k * m, m); };
        auto col_out = [&](std::size_t k) { return std::span<double>(out_buf.data() + k * m, m); };
        LaneInputs in{col_in(0), col_in(1), col_in(2), col_in(3),
                      col_in(4), col_in(5), col_in(6), col_in(7)};
        LaneOutputs out{col_out(0), col_out(1), col_out(2), col_out(3), col_out(4),
                        col_out(5), col_out(6), col_out(7), col_out(8), col_out(9)};
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t i = active[j];
            const auto& p = scenarios[i].params;
            col_in(0)[j] = state[i].capital;
            col_in(1)[j] = state[i].avg_maturity;
            col_in(2)[j] = state[i].implied;
            col_in(3)[j] = scenarios[i].realized.at(step_i);
            col_in(4)[j] = p.kappa;
            col_in(5)[j] = p.lambda;
            col_in(6)[j] = p.maturity;
            col_in(7)[j] = p.dt;
        }
        step_linear_batch(in, out);

        std::vector<std::size_t> still;
        still.reserve(m);
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t i = active[j];
            const auto& sc = scenarios[i];
            if (!(std::abs(out.denom_margin[j]) > sc.guards.eps_deg)) {
                runs[i].termination = Termination::DegenerateDenominator;
                continue;
            }
            const FundState next{state[i].t + sc.params.dt, out.capital[j], out.avg_maturity[j],
                                 out.implied[j], out.new_vega[j]};
            if (!(next.capital <= 0.0) && next.avg_maturity <= sc.params.dt) {
                runs[i].termination = Termination::MaturityCollapse;
                continue;
            }
            const auto outcome = classify_step_outcome(sc, next);
            if (outcome.record) runs[i].capital.push_back(next.capital);
            if (outcome.termination) {
                runs[i].termination = *outcome.termination;
                continue;
            }
            state[i] = next;
            still.push_back(i);
        }
        active.swap(still);
    }
    for (std::size_t i : active) runs[i].termination = Termination::HorizonReached;
    return runs;
}

std::size_t resolve_threads(std::size_t requested) {
    if (requested == 0) {
        requested = std::max(1u, std::thread::hardware_concurrency());
    }
    return requested;
}

}  // namespace

bool is_sweep_axis(std::string_view name) {
    return name == "c0" || name == "kappa" || name == "lambda" || name == "sigma0" ||
           name == "R_const" || name == "realized" || name == "dt";
}

AxisSpec AxisSpec::linspace(std::string name, double lo, double hi, std::size_t count) {
    AxisSpec a{std::move(name), {}};
    if (count == 1) {
        a.values.push_back(lo);
        return a;
    }
    for (std::size_t i = 0; i < count; ++i) {
        a.values.push_back(i + 1 == count ? hi
                                          : lo + (hi - lo) * static_cast<double>(i) /
                                                     static_cast<double>(count - 1));
    }
    return a;
}

Scenario with_axis_value(const Scenario& base, std::string_view name, double value) {
    Scenario s = base;
    if (name == "c0") {
        s.c0 = value;
    } else if (name == "kappa") {
        s.params.kappa = value;
    } else if (name == "lambda") {
        s.params.lambda = value;
    } else if (name == "sigma0") {
        s.sigma0 = value;
    } else if (name == "R_const" || name == "realized") {
        s.realized = RealizedPath::constant(value);
    } else if (name == "dt") {
        s.params.dt = value;
    } else {
        throw Error(ErrorCode::InvalidAxis, "unknown sweep axis '" + std::string(name) + "'",
                    "axes");
    }
    return s;
}

Scenario sweep_cell_scenario(const Scenario& base, const std::vector<AxisSpec>& axes,
                             std::size_t index, std::vector<double>* coords) {
    Scenario s = base;
    std::size_t stride = 1;
    for (const auto& a : axes) stride *= a.values.size();
    if (coords) coords->clear();
    for (const auto& a : axes) {
        stride /= a.values.size();
        const double v = a.values[(index / stride) % a.values.size()];
        s = with_axis_value(s, a.name, v);
        if (coords) coords->push_back(v);
    }
    return s;
}

RegimeMap sweep(const Scenario& base, const std::vector<AxisSpec>& axes,
                const SweepOptions& options) {
    if (axes.empty() || axes.size() > 2) {
        throw Error(ErrorCode::InvalidAxis, "sweep takes one or two axes", "axes");
    }
    std::size_t total = 1;
    for (const auto& a : axes) {
        if (!is_sweep_axis(a.name)) {
            throw Error(ErrorCode::InvalidAxis, "unknown sweep axis '" + a.name + "'", "axes");
        }
        if (a.values.empty()) {
            throw Error(ErrorCode::InvalidAxis, "axis '" + a.name + "' has no values", "axes");
        }
        total *= a.values.size();
    }

    RegimeMap map;
    map.axes = axes;
    map.cells.resize(total);
    std::vector<Scenario> scenarios(total);
    for (std::size_t i = 0; i < total; ++i) {
        scenarios[i] = sweep_cell_scenario(base, axes, i, &map.cells[i].coords);
        scenarios[i].validate();
    }

    const bool batched = options.batched && base.params.impact == ImpactModel::Linear;
    const std::size_t chunk = batched ? kLanesPerChunk : 1;
    const std::size_t n_chunks = (total + chunk - 1) / chunk;
    std::atomic<std::size_t> next_chunk{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            const std::size_t first = c * chunk;
            const std::size_t last = std::min(total, first + chunk);
            if (batched) {
                std::vector<Scenario> group(scenarios.begin() + first, scenarios.begin() + last);
                const auto runs = run_lanes(group);
                for (std::size_t k = 0; k < runs.size(); ++k) {
                    map.cells[first + k].report = classify(runs[k].capital, runs[k].termination,
                                                           thresholds_of(group[k]));
                }
            } else {
                for (std::size_t i = first; i < last; ++i) {
                    map.cells[i].report = classify(simulate(scenarios[i]));
                }
            }
        }
    };

    const std::size_t threads = std::min(resolve_threads(options.threads), n_chunks);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return map;
}

}  // namespace propsim
