#pragma once

#include <optional>
#include <utility>

#include "fracperim/grid.hpp"
#include "fracperim/kernel.hpp"

namespace fp {

// Fixed total order of cells by distance to the domain center cell, ties
// broken by flat index. Prefixes of the order are the discrete balls.
struct RearrangementPlan {
    GridDomain domain;
    std::array<std::int64_t, 3> center{0, 0, 0};
    std::vector<std::int64_t> cell_order; // flat indices, distance ascending

    static RearrangementPlan build(const GridDomain& domain);
};

// symmetric decreasing rearrangement: the multiset of cell values sorted
// descending and laid out along the plan order (mass preserved exactly)
DensityGrid rearrange(const DensityGrid& eta, const RearrangementPlan& plan);
IndicatorGrid rearrange(const IndicatorGrid& E, const RearrangementPlan& plan);

// indicator of the ceil(m/h^d) cells nearest the domain center
IndicatorGrid ball_of_mass(double m, const GridDomain& domain);

// outer radius R(m,s) = (m/omega_d + s^d)^{1/d} of the annulus B_R \ B_s
// with measure m
double annulus_outer_radius(double m, double s, int dim);

// (lhs, rhs) of the comparison
//   integral of K over B_R \ F  >=  integral of K over B_R \ B^{|F|}
// by table summation around the domain center; F must lie inside the
// discrete ball of radius R. A cutoff caps the kernel (required for
// sigma >= 0, where the table has no self weight).
std::pair<double, double>
annulus_bound_check(const IndicatorGrid& F, const KernelTable& table, double R,
                    std::optional<double> cutoff = std::nullopt);

} // namespace fp
