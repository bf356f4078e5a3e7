#pragma once

#include <cstdint>

namespace dfs {

// Thread-local count of floating-point multiplications executed by the
// instrumented kernels (convolution, pooling scale, classifier). The shift
// kernels are pure block copies and never touch this counter; tests pin
// their traced count to exactly zero.
namespace opcount {

inline std::uint64_t& counter() {
    thread_local std::uint64_t n = 0;
    return n;
}

inline void add_mults(std::uint64_t n) { counter() += n; }

}  // namespace opcount

// RAII trace over a region: mult_ops() reports the multiplications executed
// between construction and the call.
class OpTrace {
  public:
    OpTrace() : start_(opcount::counter()) {}
    std::uint64_t mult_ops() const { return opcount::counter() - start_; }

  private:
    std::uint64_t start_;
};

template <typename Fn>
std::uint64_t count_mult_ops(Fn&& traced_region) {
    OpTrace trace;
    traced_region();
    return trace.mult_ops();
}

}  // namespace dfs
