#include "propsim/regime.hpp"

#include <algorithm>
#include <cmath>

namespace propsim {

std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::Flat: return "Flat";
        case Regime::SmoothBubble: return "SmoothBubble";
        case Regime::GapBubble: return "GapBubble";
        case Regime::MultiBubble: return "MultiBubble";
        case Regime::UnboundedGrowth: return "UnboundedGrowth";
        case Regime::MonotoneDecline: return "MonotoneDecline";
    }
    return "Unknown";
}

std::optional<Regime> regime_from_string(std::string_view s) {
    for (auto r : {Regime::Flat, Regime::SmoothBubble, Regime::GapBubble, Regime::MultiBubble,
                   Regime::UnboundedGrowth, Regime::MonotoneDecline}) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

std::vector<PeakEvent> find_peaks(std::span<const double> c, double min_prominence) {
    std::vector<PeakEvent> peaks;
    if (c.size() < 3) return peaks;
    const double threshold = min_prominence * *std::max_element(c.begin(), c.end());
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        if (!(c[i] > c[i - 1] && c[i] > c[i + 1])) continue;
        // Lowest point on each side before the series rises above this peak.
        double left_min = c[i];
        for (std::size_t j = i; j-- > 0;) {
            if (c[j] > c[i]) break;
            left_min = std::min(left_min, c[j]);
        }
        double right_min = c[i];
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            if (c[j] > c[i]) break;
            right_min = std::min(right_min, c[j]);
        }
        const double prominence = c[i] - std::max(left_min, right_min);
        if (prominence >= threshold) peaks.push_back({i, c[i], prominence});
    }
    return peaks;
}

std::vector<PeakEvent> find_peaks(const Trajectory& traj, double min_prominence) {
    const auto c = traj.capital_series();
    return find_peaks(c, min_prominence);
}

std::vector<GapEvent> detect_gaps(std::span<const double> c, double threshold) {
    std::vector<GapEvent> gaps;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
        if (c[i] == 0.0) continue;
        const double rel = (c[i + 1] - c[i]) / std::abs(c[i]);
        if (std::abs(rel) >= threshold) gaps.push_back({i, rel});
    }
    return gaps;
}

std::vector<GapEvent> detect_gaps(const Trajectory& traj, double threshold) {
    const auto c = traj.capital_series();
    return detect_gaps(c, threshold);
}

namespace {

bool increasing_tail(std::span<const double> c) {
    const std::size_t steps = c.size() - 1;
    const std::size_t tail = std::max<std::size_t>(1, (steps + 9) / 10);
    for (std::size_t i = c.size() - tail; i < c.size(); ++i) {
        if (!(c[i] > c[i - 1])) return false;
    }
    return true;
}

}  // namespace

RegimeReport classify(std::span<const double> c, Termination termination,
                      const Thresholds& thresholds) {
    RegimeReport rep;
    rep.termination = termination;
    if (c.empty()) return rep;
    rep.final_capital = c.back();
    rep.peaks = find_peaks(c, thresholds.peak_prominence);
    rep.gaps = detect_gaps(c, thresholds.gap_threshold);
    if (termination == Termination::Bankrupt) rep.bankruptcy_step = c.size() - 1;

    const double c0 = c.front();
    const bool unbounded =
        termination == Termination::NumericalOverflow ||
        (termination == Termination::HorizonReached && c.size() >= 2 && c.back() > 5.0 * c0 &&
         increasing_tail(c));
    double max_dev = 0.0;
    for (double x : c) max_dev = std::max(max_dev, std::abs(x - c0));

    if (unbounded) {
        rep.regime = Regime::UnboundedGrowth;
    } else if (rep.peaks.size() >= 2) {
        rep.regime = Regime::MultiBubble;
    } else if (!rep.gaps.empty()) {
        rep.regime = Regime::GapBubble;
    } else if (rep.peaks.size() == 1) {
        rep.regime = Regime::SmoothBubble;
    } else if (max_dev < 0.01 * std::abs(c0)) {
        rep.regime = Regime::Flat;
    } else {
        rep.regime = Regime::MonotoneDecline;
    }
    return rep;
}

RegimeReport classify(const Trajectory& traj, const Thresholds& thresholds) {
    const auto c = traj.capital_series();
    return classify(c, traj.termination, thresholds);
}

RegimeReport classify(const Trajectory& traj) {
    const auto& g = traj.scenario.guards;
    return classify(traj, Thresholds{g.gap_threshold, g.peak_prominence});
}

}  // namespace propsim
