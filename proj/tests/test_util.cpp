#include "doctest.h"

#include <cmath>
#include <vector>

#include "fracperim/util.hpp"

using namespace fp;

TEST_CASE("unit ball volumes for d <= 3") {
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(unit_ball_volume(2) == doctest::Approx(M_PI).epsilon(1e-14));
    CHECK(unit_ball_volume(3) ==
          doctest::Approx(4.0 * M_PI / 3.0).epsilon(1e-14));
}

TEST_CASE("compensated summation survives cancellation") {
    NeumaierSum s;
    s.add(1.0);
    s.add(1e16);
    s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 2.0);
}

TEST_CASE("parallel block reduction is thread-count independent") {
    const std::int64_t n = 100000;
    const auto block_sum = [](std::int64_t b, std::int64_t e) {
        NeumaierSum s;
        for (std::int64_t i = b; i < e; ++i)
            s.add(0.1 * static_cast<double>(i % 97) + 1e-13);
        return s.value();
    };
    const int saved = worker_threads();
    worker_threads() = 1;
    const double v1 = parallel_reduce_blocks(n, 1024, block_sum);
    worker_threads() = 8;
    const double v8 = parallel_reduce_blocks(n, 1024, block_sum);
    worker_threads() = saved;
    CHECK(v1 == v8); // bit identical, not approximately equal
    NeumaierSum ref;
    for (std::int64_t i = 0; i < n; ++i)
        ref.add(0.1 * static_cast<double>(i % 97) + 1e-13);
    CHECK(v1 == doctest::Approx(ref.value()).epsilon(1e-12));
}

TEST_CASE("fnv1a hashes are stable and input sensitive") {
    const std::uint64_t empty = kFnvOffsetBasis;
    CHECK(fnv1a(nullptr, 0) == empty);
    const char a = 'a';
    CHECK(fnv1a(&a, 1) != empty);
    CHECK(fnv1a_value(1.0) != fnv1a_value(2.0));
    CHECK(fnv1a_value(1.0) == fnv1a_value(1.0));
}
