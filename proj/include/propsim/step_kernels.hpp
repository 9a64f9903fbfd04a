#pragma once

#include <span>
#include <string_view>

namespace propsim {

/// Structure-of-arrays view of a batch of independent linear-impact lanes.
/// All spans must have the same length.
struct LaneInputs {
    std::span<const double> capital;
    std::span<const double> avg_maturity;
    std::span<const double> implied;
    std::span<const double> realized;
    std::span<const double> kappa;
    std::span<const double> lambda;
    std::span<const double> maturity;
    std::span<const double> dt;
};

struct LaneOutputs {
    std::span<double> capital;
    std::span<double> avg_maturity;
    std::span<double> implied;
    std::span<double> realized_pnl;
    std::span<double> implied_pnl;
    std::span<double> total_pnl;
    std::span<double> aged_vega;
    std::span<double> new_vega;
    std::span<double> trade;
    std::span<double> denom_margin;
};

enum class KernelIsa { Scalar, Avx2 };

std::string_view to_string(KernelIsa isa);

/// Best ISA supported by the running CPU and compiled into this build.
KernelIsa detect_isa();

/// ISA used by step_linear_batch. Honours PROPSIM_KERNEL=scalar.
KernelIsa active_isa();

/// Advances every lane one linear-impact step. Degeneracy is not checked
/// here; callers inspect denom_margin per lane. Outputs are bit-identical
/// across ISAs.
void step_linear_batch(const LaneInputs& in, const LaneOutputs& out);
void step_linear_batch(const LaneInputs& in, const LaneOutputs& out, KernelIsa isa);

namespace kernels {
void step_linear_scalar(const LaneInputs& in, const LaneOutputs& out);
#if defined(__x86_64__) || defined(_M_X64)
void step_linear_avx2(const LaneInputs& in, const LaneOutputs& out);
#endif
}  // namespace kernels

}  // namespace propsim
