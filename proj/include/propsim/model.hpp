#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace propsim {

enum class ImpactModel { Linear, Sqrt };

std::string_view to_string(ImpactModel m);

/// Fixed constants of the constant-exposure fund and its market.
///
/// Units follow the usual convention for this model: capital, vega and
/// lambda are in millions; implied and realized marks in vol points.
struct ModelParams {
    double kappa = 0.1;    ///< target exposure as a fraction of capital
    double lambda = 0.05;  ///< vol points of impact per million of vega traded
    double maturity = 5.0; ///< standard maturity T of new contracts, years
    double dt = 0.01;      ///< step length, years
    ImpactModel impact = ImpactModel::Linear;

    /// Throws Error(RangeError) naming the first violated field.
    void validate() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct FundState {
    double t = 0.0;
    double capital = 0.0;
    double avg_maturity = 0.0;
    double implied = 0.0;
    double vega = 0.0;
};

/// Per-step decomposition of profit into the matured (realized) slice and
/// the mark-to-market move on the aged book.
struct StepBreakdown {
    double realized_pnl = 0.0;
    double implied_pnl = 0.0;
    double total_pnl = 0.0;
    double aged_vega = 0.0;
    double new_vega = 0.0;
    double trade = 0.0;
    double denom_margin = 0.0;
};

/// Realized mark per step: either one constant or an explicit sequence.
class RealizedPath {
public:
    RealizedPath() = default;

    static RealizedPath constant(double value);
    static RealizedPath sequence(std::vector<double> values);

    bool is_constant() const noexcept { return constant_; }
    double at(std::size_t step) const;
    std::size_t length() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const RealizedPath&, const RealizedPath&) = default;

private:
    bool constant_ = true;
    std::vector<double> values_{0.0};
};

struct Guards {
    double eps_deg = 1e-10;
    double overflow_cap = 1e9;
    double gap_threshold = 0.10;
    double peak_prominence = 0.1;
    /// Bankrupt once capital <= ruin_fraction * c0. Zero means strictly C <= 0.
    double ruin_fraction = 0.05;

    friend bool operator==(const Guards&, const Guards&) = default;
};

struct Scenario {
    ModelParams params;
    double c0 = 1000.0;
    double sigma0 = 20.0;
    std::optional<double> m0;  ///< defaults to params.maturity
    RealizedPath realized = RealizedPath::constant(20.0);
    std::size_t horizon = 1000;
    Guards guards;

    double initial_maturity() const { return m0.value_or(params.maturity); }
    FundState initial_state() const;

    /// Throws Error(RangeError) naming the first violated field.
    void validate() const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

enum class Termination {
    HorizonReached,
    Bankrupt,
    DegenerateDenominator,
    MaturityCollapse,
    NumericalOverflow,
};

std::string_view to_string(Termination t);
std::optional<Termination> termination_from_string(std::string_view s);

struct Trajectory {
    Scenario scenario;
    std::vector<FundState> states;
    std::vector<StepBreakdown> breakdowns;
    Termination termination = Termination::HorizonReached;
    /// First step index whose state carries a negative implied mark.
    std::optional<std::size_t> first_negative_implied;

    std::size_t steps() const noexcept { return breakdowns.size(); }
    std::vector<double> capital_series() const;
};

}  // namespace propsim
