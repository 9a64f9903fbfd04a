#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "propsim/model.hpp"

namespace propsim {

struct PeakEvent {
    std::size_t step = 0;
    double value = 0.0;
    double prominence = 0.0;

    friend bool operator==(const PeakEvent&, const PeakEvent&) = default;
};

struct GapEvent {
    std::size_t step = 0;  ///< the step from `step` to `step + 1`
    double rel_change = 0.0;

    friend bool operator==(const GapEvent&, const GapEvent&) = default;
};

enum class Regime { Flat, SmoothBubble, GapBubble, MultiBubble, UnboundedGrowth, MonotoneDecline };

std::string_view to_string(Regime r);
std::optional<Regime> regime_from_string(std::string_view s);

struct Thresholds {
    double gap_threshold = 0.10;
    double peak_prominence = 0.1;  ///< fraction of the series maximum
};

struct RegimeReport {
    Regime regime = Regime::Flat;
    std::vector<PeakEvent> peaks;
    std::vector<GapEvent> gaps;
    std::optional<std::size_t> bankruptcy_step;
    double final_capital = 0.0;
    Termination termination = Termination::HorizonReached;

    friend bool operator==(const RegimeReport&, const RegimeReport&) = default;
};

/// Strict local maxima whose topographic prominence is at least
/// min_prominence * max(capital), in step order.
std::vector<PeakEvent> find_peaks(std::span<const double> capital, double min_prominence);
std::vector<PeakEvent> find_peaks(const Trajectory& traj, double min_prominence);

/// Steps where |C[i+1] - C[i]| / |C[i]| >= threshold.
std::vector<GapEvent> detect_gaps(std::span<const double> capital, double threshold);
std::vector<GapEvent> detect_gaps(const Trajectory& traj, double threshold);

/// Precedence: UnboundedGrowth, MultiBubble, GapBubble, SmoothBubble, Flat,
/// MonotoneDecline.
RegimeReport classify(std::span<const double> capital, Termination termination,
                      const Thresholds& thresholds);
RegimeReport classify(const Trajectory& traj, const Thresholds& thresholds);
/// Uses the thresholds carried in the trajectory's scenario guards.
RegimeReport classify(const Trajectory& traj);

// ---------------------------------------------------------------------------
// Sweeps

struct AxisSpec {
    std::string name;
    std::vector<double> values;

    static AxisSpec linspace(std::string name, double lo, double hi, std::size_t count);
};

/// Names accepted as sweep axes.
bool is_sweep_axis(std::string_view name);

/// Returns a copy of the scenario with one swept parameter replaced.
/// Throws Error(InvalidAxis) for unknown names.
Scenario with_axis_value(const Scenario& base, std::string_view name, double value);

struct SweepCell {
    std::vector<double> coords;  ///< one value per axis
    RegimeReport report;
};

struct RegimeMap {
    std::vector<AxisSpec> axes;
    std::vector<SweepCell> cells;  ///< row-major, first axis outermost
};

struct SweepOptions {
    std::size_t threads = 1;  ///< 0 = hardware concurrency
    bool batched = true;      ///< use the SIMD lane kernel for linear impact
};

/// Evaluates simulate + classify on every grid point.
RegimeMap sweep(const Scenario& base, const std::vector<AxisSpec>& axes,
                const SweepOptions& options = {});

/// Scenario at a flat cell index of the grid.
Scenario sweep_cell_scenario(const Scenario& base, const std::vector<AxisSpec>& axes,
                             std::size_t index, std::vector<double>* coords = nullptr);

// ---------------------------------------------------------------------------
// Sensitivity

struct LyapunovResult {
    double exponent = 0.0;  ///< per year
    std::size_t steps = 0;  ///< steps accumulated
};

/// Two-trajectory (Benettin) estimate with per-step renormalization in the
/// space of relative differences of (capital, avg maturity, implied).
LyapunovResult lyapunov_estimate(const Scenario& scenario, double epsilon = 1e-8,
                                 std::optional<std::size_t> max_steps = std::nullopt);

}  // namespace propsim
