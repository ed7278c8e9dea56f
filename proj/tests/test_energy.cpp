#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "fracperim/energy.hpp"
#include "fracperim/rearrange.hpp"

using namespace fp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GridDomain line_domain(std::int64_t n, double h, double org) {
    return GridDomain(1, {n, 1, 1}, h, {org, 0, 0});
}

KernelTable make_table(int dim, double sigma, double h, double cov) {
    KernelParams p;
    p.dim = dim;
    p.sigma = sigma;
    p.cell_size = h;
    return build_kernel_table(p, cov);
}

// unit interval [0,1] resolved with n cells
IndicatorGrid unit_interval(std::int64_t n) {
    const double h = 1.0 / static_cast<double>(n);
    const auto dom = line_domain(2 * n, h, -0.5);
    return rasterize(ShapeSpec::ball({0.5, 0, 0}, 0.5), dom);
}

IndicatorGrid random_set(const GridDomain& dom, std::uint64_t seed,
                         double fill = 0.4) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    IndicatorGrid E(dom);
    for (auto& c : E.cells)
        c = u(rng) < fill ? 1 : 0;
    return E;
}

} // namespace

TEST_CASE("fractional perimeter of the unit interval") {
    const auto E = unit_interval(256);
    const auto t = make_table(1, 0.5, 1.0 / 256, 1.5);
    const auto rep = H_energy(E, t, kInf, RenormMode::None);
    // closed form 2/(sigma(1-sigma)) = 8
    CHECK(rep.value == doctest::Approx(8.0).epsilon(0.02));
    CHECK(rep.value == rep.raw_energy);
    CHECK(rep.renorm_term == 0.0);
    CHECK(rep.window_kind == "inner");
}

TEST_CASE("renormalized 0-perimeter of the unit interval") {
    const auto E = unit_interval(256);
    const auto t = make_table(1, 0.0, 1.0 / 256, 1.5);
    const auto viaR = H_energy(E, t, kInf, RenormMode::DiscreteGamma);
    const auto via1 = H0_perimeter(E, t);
    CHECK(viaR.value == doctest::Approx(2.0).epsilon(0.02));
    CHECK(via1.value ==
          doctest::Approx(viaR.value).epsilon(1e-12)); // exact identity
}

TEST_CASE("Riesz energy of the unit interval") {
    const auto E = unit_interval(256);
    const auto t = make_table(1, -0.5, 1.0 / 256, 1.5);
    const auto rep = J_energy(E, t, 0.0, RenormMode::None);
    // closed form -2/((-sigma)(1-sigma)) = -8/3
    CHECK(rep.value == doctest::Approx(-8.0 / 3.0).epsilon(0.02));
    CHECK(rep.value <= 0.0);
    CHECK(rep.window_kind == "outer");
}

TEST_CASE("empty window and empty set give zero") {
    const auto dom = line_domain(32, 0.125, -2.0);
    const auto E = rasterize(ShapeSpec::ball({0, 0, 0}, 0.4), dom);
    const auto t = make_table(1, 0.5, 0.125, 2.0);
    CHECK(H_energy(E, t, 0.1, RenormMode::None).raw_energy == 0.0);

    IndicatorGrid empty(dom);
    for (auto renorm : {RenormMode::None, RenormMode::DiscreteGamma}) {
        const auto rep = H_energy(empty, t, 1.0, renorm);
        CHECK(rep.value == 0.0);
        CHECK(rep.renorm_term == 0.0);
    }
    CHECK(J_energy(empty, t, 1.0, RenormMode::None).value == 0.0);
}

TEST_CASE("small ball has zero truncated Riesz energy") {
    const GridDomain dom(2, {40, 40, 1}, 0.05, {-1, -1, 0});
    const auto E = rasterize(ShapeSpec::ball({0, 0, 0}, 0.4), dom);
    const auto t = make_table(2, 0.5, 0.05, 2.0);
    CHECK(J_energy(E, t, 1.0, RenormMode::None).raw_energy == 0.0);
}

TEST_CASE("disjoint far sets add up, with a coverage warning") {
    const double h = 1.0 / 16;
    const auto dom = line_domain(200, h, 0.0);
    const auto one = rasterize(ShapeSpec::ball({0.5, 0, 0}, 0.5), dom);
    const auto two = rasterize(
        ShapeSpec::unite({ShapeSpec::ball({0.5, 0, 0}, 0.5),
                          ShapeSpec::ball({10.5, 0, 0}, 0.5)}),
        dom);
    const auto t = make_table(1, -0.5, h, 3.0);
    const auto r1 = J_energy(one, t, 0.25, RenormMode::None);
    const auto r2 = J_energy(two, t, 0.25, RenormMode::None);
    CHECK(r1.raw_energy < 0.0);
    CHECK_FALSE(r1.coverage_warning);
    CHECK(r2.coverage_warning);
    CHECK(r2.raw_energy == doctest::Approx(2 * r1.raw_energy).epsilon(1e-12));
}

TEST_CASE("divergent parameter combinations error out") {
    const auto E = unit_interval(32);
    const auto tneg = make_table(1, -0.5, 1.0 / 32, 1.5);
    const auto tpos = make_table(1, 0.5, 1.0 / 32, 1.5);
    const auto t0 = make_table(1, 0.0, 1.0 / 32, 1.5);
    CHECK_THROWS_AS(H_energy(E, tneg, kInf, RenormMode::None),
                    DivergenceError);
    CHECK_THROWS_AS(J_energy(E, tpos, 0.0, RenormMode::None),
                    DivergenceError);
    CHECK_THROWS_AS(J_energy(E, tpos, 1.0 / 64, RenormMode::None),
                    DivergenceError);
    CHECK_THROWS_AS(H0_perimeter(E, tpos), ParameterError); // needs sigma 0
    CHECK_THROWS_AS(renorm_gamma(RenormMode::AnalyticGamma, t0, 0.0),
                    DivergenceError);
}

TEST_CASE("coverage violations error out") {
    const auto E = unit_interval(32);
    const auto t = make_table(1, 0.5, 1.0 / 32, 0.5);
    CHECK_THROWS_AS(H_energy(E, t, 0.75, RenormMode::AnalyticGamma),
                    CoverageError);
    const auto t0 = make_table(1, 0.0, 1.0 / 32, 0.5);
    CHECK_THROWS_AS(H0_perimeter(E, t0), CoverageError);
}

TEST_CASE("grid and table resolutions must match") {
    const auto E = unit_interval(32);
    const auto t = make_table(1, 0.5, 1.0 / 64, 1.5);
    CHECK_THROWS_AS(H_energy(E, t, 1.0, RenormMode::None),
                    DomainMismatchError);
}

TEST_CASE("report identity value = raw - renorm") {
    const auto E = unit_interval(64);
    const auto t = make_table(1, 0.5, 1.0 / 64, 2.5);
    for (auto renorm : {RenormMode::None, RenormMode::AnalyticGamma,
                        RenormMode::DiscreteGamma}) {
        const auto rep = H_energy(E, t, 2.0, renorm);
        CHECK(rep.value == rep.raw_energy - rep.renorm_term);
        if (renorm == RenormMode::None)
            CHECK(rep.renorm_term == 0.0);
    }
}

TEST_CASE("finite window clamps to the diameter under discrete gamma") {
    const auto E = unit_interval(64);
    const auto t = make_table(1, 0.5, 1.0 / 64, 2.5);
    const auto a = H_energy(E, t, 1.5, RenormMode::DiscreteGamma);
    const auto b = H_energy(E, t, 2.5, RenormMode::DiscreteGamma);
    CHECK(a.value == b.value); // bounded set: exact beyond diameter
    CHECK(a.window_effective == b.window_effective);
    CHECK(a.window_effective < 1.5);
}

TEST_CASE("pointwise potential closed form at the interval midpoint") {
    const std::int64_t n = 256;
    const auto E = unit_interval(n);
    const auto t = make_table(1, -0.5, 1.0 / n, 1.5);
    // x at the cell center c nearest the midpoint of [0,1]:
    // -int_0^1 |c-y|^{-1/2} dy - gamma = -2(sqrt(c) + sqrt(1-c)) + 4
    const auto dom = E.domain;
    std::array<std::int64_t, 3> x{0, 0, 0};
    for (std::int64_t i = 0; i < dom.extents[0]; ++i)
        if (std::abs(dom.cell_center({i, 0, 0})[0] - 0.5) <
            std::abs(dom.cell_center(x)[0] - 0.5))
            x = {i, 0, 0};
    const double c = dom.cell_center(x)[0];
    REQUIRE(std::abs(c - 0.5) <= 0.5 / n);
    const double j =
        pointwise_potential(x, E, t, 0.0, RenormMode::AnalyticGamma);
    CHECK(j == doctest::Approx(4.0 - 2.0 * (std::sqrt(c) + std::sqrt(1 - c)))
                   .epsilon(0.01));
}

TEST_CASE("potential of an empty target is minus gamma") {
    const auto dom = line_domain(32, 0.25, -4.0);
    IndicatorGrid empty(dom);
    const auto t = make_table(1, 0.5, 0.25, 3.0);
    const double j =
        pointwise_potential({0, 0, 0}, empty, t, 1.0,
                            RenormMode::DiscreteGamma);
    CHECK(j == 0.0); // discrete gamma at rho = 1 is 0
    const double ja = pointwise_potential({0, 0, 0}, empty, t, 2.0,
                                          RenormMode::AnalyticGamma);
    CHECK(ja == doctest::Approx(-gamma_rho(0.5, 2.0, 1)).epsilon(1e-14));
}

TEST_CASE("potential sums reproduce the renormalized J") {
    const auto dom = line_domain(48, 0.25, -6.0);
    const auto t = make_table(1, 0.5, 0.25, 13.0);
    for (std::uint64_t s : {1u, 2u, 3u}) {
        const auto E = random_set(dom, s);
        const auto rep = J_energy(E, t, 1.0, RenormMode::DiscreteGamma);
        NeumaierSum acc;
        for (std::int64_t i = 0; i < dom.cell_count(); ++i)
            if (E.cells[static_cast<std::size_t>(i)])
                acc.add(0.25 * pointwise_potential(dom.unflatten(i), E, t,
                                                   1.0,
                                                   RenormMode::DiscreteGamma));
        CHECK(acc.value() ==
              doctest::Approx(rep.value)
                  .epsilon(1e-12 * std::max(1.0, std::abs(rep.value))));
    }
}

TEST_CASE("density potential matches the indicator potential") {
    const auto dom = line_domain(32, 0.25, -4.0);
    const auto E = random_set(dom, 9);
    DensityGrid eta(dom);
    for (std::size_t i = 0; i < eta.cells.size(); ++i)
        eta.cells[i] = E.cells[i] ? 1.0 : 0.0;
    const auto t = make_table(1, -0.5, 0.25, 9.0);
    for (std::int64_t i : {0ll, 7ll, 31ll})
        CHECK(pointwise_potential(dom.unflatten(i), E, t, 1.0,
                                  RenormMode::DiscreteGamma) ==
              pointwise_potential(dom.unflatten(i), eta, t, 1.0,
                                  RenormMode::DiscreteGamma));
}

TEST_CASE("modified J hand-computed two-cell case") {
    // two occupied cells at distance 0.5, sigma = 0.5, r = 1, h = 0.5:
    // k(0) = 1 + 1 = 2 (twice), k(0.5) = 1 + 0.5 = 1.5 (two ordered pairs)
    const auto dom = line_domain(2, 0.5, 0.0);
    IndicatorGrid E(dom);
    E.cells[0] = E.cells[1] = 1;
    CHECK(modified_J(E, 0.5, 1.0) ==
          doctest::Approx(-0.25 * 7.0).epsilon(1e-14));
    IndicatorGrid empty(dom);
    CHECK(modified_J(empty, 0.5, 1.0) == 0.0);
}

TEST_CASE("modified J is minimized by the ball") {
    const GridDomain dom(2, {24, 24, 1}, 0.25, {-3, -3, 0});
    for (std::uint64_t s : {11u, 12u, 13u}) {
        auto E = random_set(dom, s, 0.2);
        if (E.occupied_count() == 0)
            continue;
        const auto plan = RearrangementPlan::build(dom);
        const auto B = rearrange(E, plan); // ball with the same cell count
        CHECK(modified_J(E, 0.5, 1.0) >=
              modified_J(B, 0.5, 1.0) - 1e-9);
    }
}

TEST_CASE("riesz interaction basics") {
    const GridDomain dom(2, {16, 16, 1}, 0.125, {-1, -1, 0});
    const auto t = make_table(2, 0.0, 0.125, 3.0);
    DensityGrid zero(dom), a(dom), b(dom);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        a.cells[i] = u(rng);
        b.cells[i] = u(rng);
    }
    CHECK(riesz_interaction(a, zero, t, 1.0) == 0.0);
    const double iab = riesz_interaction(a, b, t, 1.0);
    CHECK(riesz_interaction(b, a, t, 1.0) ==
          doctest::Approx(iab).epsilon(1e-12));
    DensityGrid half = a;
    for (auto& c : half.cells)
        c *= 0.5;
    CHECK(riesz_interaction(half, b, t, 1.0) ==
          doctest::Approx(0.5 * iab).epsilon(1e-12));

    // continuity bound |I_r| <= r^{-(d+sigma)} ||a||_1 ||b||_1
    const double hd = 0.125 * 0.125;
    double m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        m1 += a.cells[i] * hd;
        m2 += b.cells[i] * hd;
    }
    CHECK(std::abs(iab) <= m1 * m2 / std::pow(1.0, 2.0) + 1e-12);

    CHECK_THROWS_AS(riesz_interaction(a, b, t), DivergenceError);
    DensityGrid other(GridDomain(2, {16, 16, 1}, 0.25, {-2, -2, 0}));
    CHECK_THROWS_AS(riesz_interaction(a, other, t, 1.0),
                    DomainMismatchError);
}

TEST_CASE("direct and convolution engines agree") {
    const GridDomain dom1 = line_domain(64, 0.125, -4.0);
    const GridDomain dom2(2, {20, 20, 1}, 0.2, {-2, -2, 0});
    const auto check_set = [](const IndicatorGrid& E, const KernelTable& t) {
        const auto hd =
            H_energy(E, t, 1.5, RenormMode::DiscreteGamma, Engine::Direct);
        const auto hc = H_energy(E, t, 1.5, RenormMode::DiscreteGamma,
                                 Engine::Convolution);
        const double hscale = std::max(1.0, std::abs(hd.value));
        CHECK(hc.value == doctest::Approx(hd.value).epsilon(1e-9 * hscale));
        const auto jd =
            J_energy(E, t, 1.0, RenormMode::DiscreteGamma, Engine::Direct);
        const auto jc = J_energy(E, t, 1.0, RenormMode::DiscreteGamma,
                                 Engine::Convolution);
        const double jscale = std::max(1.0, std::abs(jd.value));
        CHECK(jc.value == doctest::Approx(jd.value).epsilon(1e-9 * jscale));
    };
    const auto t1 = make_table(1, 0.5, 0.125, 4.0);
    const auto t2 = make_table(2, -0.5, 0.2, 4.0);
    for (std::uint64_t s : {21u, 22u, 23u}) {
        check_set(random_set(dom1, s), t1);
        check_set(random_set(dom2, s), t2);
    }
}
