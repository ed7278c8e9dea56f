#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fp {

// ---- error taxonomy (CLI maps these onto its exit-code contract) ----

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DomainMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct OutOfDomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptySetError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DivergenceError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct CoverageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- compensated (Neumaier) summation ----
//
// All energy reductions run through this accumulator in a fixed term order,
// so results are bit-identical across runs and thread counts.
class NeumaierSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// ---- FNV-1a (64-bit) fingerprints for reports ----

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = kFnvOffsetBasis) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

template <typename T>
std::uint64_t fnv1a_value(const T& v, std::uint64_t h = kFnvOffsetBasis) {
    static_assert(std::is_trivially_copyable_v<T>);
    return fnv1a(&v, sizeof(T), h);
}

// ---- unit-ball volume ----

// omega_d = pi^{d/2} / Gamma(d/2 + 1)
double unit_ball_volume(int dim);

// ---- deterministic parallel reduction ----

// Global worker cap used by the engines; 1 means fully sequential.
int& worker_threads();

// Splits [0, n) into fixed-size blocks, evaluates `block_sum(begin, end)` for
// each (possibly in parallel), and combines the per-block results with
// compensated summation in block order. The block partition does not depend
// on the thread count, so the result is bit-identical for any thread count.
double parallel_reduce_blocks(
    std::size_t n, std::size_t block_size,
    const std::function<double(std::size_t, std::size_t)>& block_sum);

} // namespace fp
