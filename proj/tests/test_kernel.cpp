#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fracperim/kernel.hpp"

using namespace fp;

namespace {

KernelTable table_1d(double sigma, double h, double cov) {
    KernelParams p;
    p.dim = 1;
    p.sigma = sigma;
    p.cell_size = h;
    return build_kernel_table(p, cov);
}

} // namespace

TEST_CASE("analytic gamma closed forms") {
    CHECK(gamma_rho(0.7, 1.0, 3) == 0.0);
    CHECK(gamma_rho(-1.3, 1.0, 2) == 0.0);
    CHECK(gamma_rho(0.5, 4.0, 2) == doctest::Approx(2 * M_PI).epsilon(1e-13));
    CHECK(gamma_rho(0.0, std::exp(1.0), 1) ==
          doctest::Approx(2.0).epsilon(1e-13));
    CHECK_THROWS_AS(gamma_rho(1.0, 2.0, 1), ParameterError);
    CHECK_THROWS_AS(gamma_rho(0.5, 0.0, 1), ParameterError);
}

TEST_CASE("gamma is continuous through sigma = 0") {
    for (double rho : {0.5, 2.0, 7.0})
        for (double s : {1e-3, 1e-6, 1e-9}) {
            const double ref = gamma_rho(0.0, rho, 2);
            // first-order departure in sigma: tolerance scales with s
            CHECK(gamma_rho(s, rho, 2) ==
                  doctest::Approx(ref).epsilon(std::max(1e-12, s)));
            CHECK(gamma_rho(-s, rho, 2) ==
                  doctest::Approx(ref).epsilon(std::max(1e-12, s)));
        }
}

TEST_CASE("gamma strictly increases in rho") {
    for (double s : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
        double prev = gamma_rho(s, 0.25, 2);
        for (double rho : {0.5, 1.0, 2.0, 4.0}) {
            const double g = gamma_rho(s, rho, 2);
            CHECK(g > prev);
            prev = g;
        }
    }
}

TEST_CASE("gamma annulus values") {
    CHECK(gamma_annulus(0.0, 1.0, std::exp(2.0), 1) ==
          doctest::Approx(4.0).epsilon(1e-13));
    CHECK(gamma_annulus(0.5, 1.0, 4.0, 2) ==
          doctest::Approx(2 * M_PI).epsilon(1e-13));
    CHECK_THROWS_AS(gamma_annulus(0.5, 2.0, 2.0, 2), ParameterError);
    CHECK_THROWS_AS(gamma_limit(0.0, 1), ParameterError);
    CHECK(gamma_limit(-0.5, 1) == doctest::Approx(-4.0).epsilon(1e-14));
}

TEST_CASE("1d closed-form cell pair weights") {
    // self weight: int_0^1 int_0^1 |x-y|^{-0.5} = 8/3
    CHECK(cell_pair_weight_1d(-0.5, 1.0, 0) ==
          doctest::Approx(8.0 / 3.0).epsilon(1e-14));
    // adjacent cells [0,1] x [1,2], sigma = 0.5: 8 - 4*sqrt(2)
    CHECK(cell_pair_weight_1d(0.5, 1.0, 1) ==
          doctest::Approx(8.0 - 4.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(cell_pair_weight_1d(0.0, 1.0, 0), DivergenceError);
    CHECK_THROWS_AS(cell_pair_weight_1d(0.5, 1.0, 0), DivergenceError);
    // far field: integrated within 1% of the midpoint value 1/5
    CHECK(cell_pair_weight_1d(0.0, 1.0, 5) ==
          doctest::Approx(0.2).epsilon(0.01));
}

TEST_CASE("kernel params are validated") {
    KernelParams p;
    p.dim = 4;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.dim = 2;
    p.sigma = 1.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.sigma = -2.0; // out of (-2, 1) at dim 2
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.sigma = 0.5;
    p.cell_size = 0.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.cell_size = 0.1;
    p.quadrature_tol = 0.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("2d integrated weights match independent quadrature oracles") {
    // frozen reference values from a high-precision hat-weight reduction of
    // the cell-pair double integral (30-digit adaptive quadrature)
    struct Case {
        int ox, oy;
        double sigma, want;
    };
    const Case cases[] = {
        {0, 0, -0.5, 8.0556092819183897},
        {1, 0, -0.5, 1.3269582077308775},
        {1, 1, -0.5, 0.68282620228743132},
        {2, 1, -0.5, 0.31154119119800003},
        {1, 0, 0.5, 3.6470875155031425},
        {1, 1, 0.5, 0.67600839868594708},
        {3, 2, 0.5, 0.042250424697640895},
        {1, 0, 0.0, 1.8502612458052076},
        {1, 1, 0.0, 0.65464968899678916},
        {2, 0, 0.0, 0.27305393736156695},
    };
    for (const auto& c : cases) {
        KernelParams p;
        p.dim = 2;
        p.sigma = c.sigma;
        p.cell_size = 1.0;
        const auto t = build_kernel_table(p, 5.0);
        CHECK_FALSE(t.accuracy_warning());
        CHECK(t.weight({c.ox, c.oy, 0}) ==
              doctest::Approx(c.want).epsilon(1e-10));
    }
}

TEST_CASE("3d separated pair weight matches tensor quadrature oracle") {
    KernelParams p;
    p.dim = 3;
    p.sigma = 0.5;
    p.cell_size = 1.0;
    const auto t = build_kernel_table(p, 3.0);
    CHECK(t.weight({2, 1, 1}) ==
          doctest::Approx(0.04989455083046105).epsilon(1e-10));
}

TEST_CASE("weights are symmetric under the signed permutation group") {
    KernelParams p;
    p.dim = 2;
    p.sigma = 0.25;
    p.cell_size = 0.5;
    const auto t = build_kernel_table(p, 2.0);
    const double w21 = t.weight({2, 1, 0});
    CHECK(t.weight({1, 2, 0}) == w21);
    CHECK(t.weight({-2, 1, 0}) == w21);
    CHECK(t.weight({2, -1, 0}) == w21);
    CHECK(t.weight({-1, -2, 0}) == w21);
    for (const auto& e : t.entries())
        CHECK(e.weight > 0.0);
}

TEST_CASE("table scaling: weights scale as h^{d-sigma} on touching pairs") {
    // cell-pair integrals of |z|^{-(d+sigma)} are homogeneous of degree
    // 2d - (d+sigma) under cell size
    const double sigma = 0.5;
    KernelParams p;
    p.dim = 2;
    p.sigma = sigma;
    p.cell_size = 1.0;
    const auto t1 = build_kernel_table(p, 3.0);
    p.cell_size = 0.5;
    const auto t2 = build_kernel_table(p, 1.5);
    CHECK(t2.weight({1, 1, 0}) ==
          doctest::Approx(std::pow(0.5, 2 - sigma) * t1.weight({1, 1, 0}))
              .epsilon(1e-12));
}

TEST_CASE("self weight presence follows the sign of sigma") {
    const auto tneg = table_1d(-0.5, 0.5, 2.0);
    CHECK(tneg.has_self_weight());
    CHECK(tneg.weight({0, 0, 0}) ==
          doctest::Approx(cell_pair_weight_1d(-0.5, 0.5, 0)).epsilon(1e-14));
    const auto tpos = table_1d(0.5, 0.5, 2.0);
    CHECK_FALSE(tpos.has_self_weight());
    CHECK_THROWS_AS(tpos.weight({0, 0, 0}), DivergenceError);
    CHECK_THROWS_AS(tpos.weight({99, 0, 0}), CoverageError);
}

TEST_CASE("window ranges partition the table") {
    const auto t = table_1d(0.0, 0.25, 3.0);
    const auto [b1, e1] = t.window_range(0.0, 1.0);
    const auto [b2, e2] = t.window_range(1.0, 1e30);
    CHECK(b1 == 0);
    CHECK(e1 == b2);
    CHECK(e2 == t.entries().size());
    // half open: offset at exactly distance 1 belongs to the outer window
    CHECK(t.distances()[e1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("discrete gamma conventions") {
    const auto t = table_1d(0.0, 1.0, 6.0);
    CHECK(discrete_gamma(t, 1.0) == 0.0);
    // centers in [1, 2.5): offsets +-1, +-2
    const double expect =
        2.0 * (cell_pair_weight_1d(0.0, 1.0, 1) +
               cell_pair_weight_1d(0.0, 1.0, 2));
    CHECK(discrete_gamma(t, 2.5) == doctest::Approx(expect).epsilon(1e-14));
    // rho < 1 window carries a minus sign (needs offsets below distance 1)
    CHECK(discrete_gamma(table_1d(0.0, 0.5, 3.0), 0.5) < 0.0);
    CHECK_THROWS_AS(discrete_gamma(t, 100.0), CoverageError);
    CHECK_THROWS_AS(discrete_gamma(t, -1.0), ParameterError);

    // telescoping is exact by construction
    const double hd = 1.0;
    const double annulus = t.window_weight_sum(2.0, 4.0) / hd;
    CHECK(discrete_gamma(t, 4.0) - discrete_gamma(t, 2.0) == annulus);
}

TEST_CASE("weight sums converge to the analytic ball integral for sigma<0") {
    // sum over |o h| < rho of w(o) / h^d -> gamma(sigma,rho) + int_{B_1} K
    // = -d w_d rho^{-sigma} / sigma, first order in h
    const double sigma = -0.5, rho = 2.0;
    const double target = -2.0 * std::pow(rho, -sigma) / sigma;
    double err_prev = 1e30;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        const auto t = table_1d(sigma, h, rho);
        const double s = t.window_weight_sum(0.0, rho) / h;
        const double err = std::abs(s - target);
        CHECK(err < err_prev);
        err_prev = err;
    }
    CHECK(err_prev < 0.05);
}

TEST_CASE("kernel table cache round trips") {
    KernelParams p;
    p.dim = 2;
    p.sigma = -0.25;
    p.cell_size = 0.5;
    const auto t = build_kernel_table(p, 2.0);
    const std::string path = "kernel_test_cache.fpkt";
    write_fpkt(path, t);
    const auto r = read_fpkt(path);
    CHECK(r.fingerprint() == t.fingerprint());
    CHECK(r.entries().size() == t.entries().size());
    CHECK(r.max_offset() == t.max_offset());

    std::ofstream bad("kernel_test_bad.fpkt", std::ios::binary);
    bad << "JUNKJUNKJUNK";
    bad.close();
    CHECK_THROWS_AS(read_fpkt("kernel_test_bad.fpkt"), IoError);
    CHECK_THROWS_AS(read_fpkt("kernel_test_missing.fpkt"), IoError);
    std::remove(path.c_str());
    std::remove("kernel_test_bad.fpkt");
}

TEST_CASE("unknown cache version is rejected") {
    KernelParams p;
    p.dim = 1;
    p.sigma = 0.5;
    p.cell_size = 1.0;
    const auto t = build_kernel_table(p, 2.0);
    const std::string path = "kernel_test_ver.fpkt";
    write_fpkt(path, t);
    {
        std::fstream f(path,
                       std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(4);
        const std::uint32_t v = 99;
        f.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    CHECK_THROWS_AS(read_fpkt(path), IoError);
    std::remove(path.c_str());
}

TEST_CASE("far field accuracy tags") {
    const auto t = table_1d(0.0, 1.0, 7.0);
    CHECK(t.weight({3, 0, 0}) ==
          doctest::Approx(cell_pair_weight_1d(0.0, 1.0, 3)).epsilon(1e-14));
    for (const auto& e : t.entries()) {
        const auto cheb = std::abs(e.offset[0]);
        if (cheb <= 4)
            CHECK(e.accuracy == WeightAccuracy::Integrated);
        else
            CHECK(e.accuracy == WeightAccuracy::Midpoint);
    }
    // midpoint entry value
    CHECK(t.weight({6, 0, 0}) == doctest::Approx(1.0 / 6).epsilon(1e-14));
}
