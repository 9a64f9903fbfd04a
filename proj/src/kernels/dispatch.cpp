#include <cstdlib>
#include <string_view>

#include "propsim/step_kernels.hpp"

namespace propsim {

std::string_view to_string(KernelIsa isa) {
    return isa == KernelIsa::Avx2 ? "avx2" : "scalar";
}

KernelIsa detect_isa() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
    if (__builtin_cpu_supports("avx2")) return KernelIsa::Avx2;
#endif
    return KernelIsa::Scalar;
}

KernelIsa active_isa() {
    static const KernelIsa isa = [] {
        const char* forced = std::getenv("PROPSIM_KERNEL");
        if (forced && std::string_view(forced) == "scalar") return KernelIsa::Scalar;
        return detect_isa();
    }();
    return isa;
}

void step_linear_batch(const LaneInputs& in, const LaneOutputs& out) {
    step_linear_batch(in, out, active_isa());
}

void step_linear_batch(const LaneInputs& in, const LaneOutputs& out, KernelIsa isa) {
#if defined(__x86_64__) || defined(_M_X64)
    if (isa == KernelIsa::Avx2) {
        kernels::step_linear_avx2(in, out);
        return;
    }
#endif
    (void)isa;
    kernels::step_linear_scalar(in, out);
}

}  // namespace propsim
