#include "fracperim/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fp {

RearrangementPlan RearrangementPlan::build(const GridDomain& domain) {
    RearrangementPlan plan;
    plan.domain = domain;
    plan.center = domain.center_cell();
    const auto n = static_cast<std::size_t>(domain.cell_count());
    const auto c0 = domain.cell_center(plan.center);
    std::vector<double> dist(n, 0.0);
    plan.cell_order.resize(n);
    for (std::size_t f = 0; f < n; ++f) {
        plan.cell_order[f] = static_cast<std::int64_t>(f);
        const auto p = domain.cell_center(
            domain.unflatten(static_cast<std::int64_t>(f)));
        double d2 = 0.0;
        for (int a = 0; a < domain.dim; ++a) {
            const auto u = static_cast<std::size_t>(a);
            d2 += (p[u] - c0[u]) * (p[u] - c0[u]);
        }
        dist[f] = d2;
    }
    std::sort(plan.cell_order.begin(), plan.cell_order.end(),
              [&](std::int64_t a, std::int64_t b) {
                  const double da = dist[static_cast<std::size_t>(a)];
                  const double db = dist[static_cast<std::size_t>(b)];
                  if (da != db)
                      return da < db;
                  return a < b;
              });
    return plan;
}

DensityGrid rearrange(const DensityGrid& eta, const RearrangementPlan& plan) {
    if (!(eta.domain == plan.domain))
        throw DomainMismatchError("rearrange: plan built for another domain");
    std::vector<double> values = eta.cells;
    std::sort(values.begin(), values.end(), std::greater<double>());
    DensityGrid out(eta.domain);
    for (std::size_t i = 0; i < values.size(); ++i)
        out.cells[static_cast<std::size_t>(plan.cell_order[i])] = values[i];
    return out;
}

IndicatorGrid rearrange(const IndicatorGrid& E, const RearrangementPlan& plan) {
    if (!(E.domain == plan.domain))
        throw DomainMismatchError("rearrange: plan built for another domain");
    IndicatorGrid out(E.domain);
    const auto k = static_cast<std::size_t>(E.occupied_count());
    for (std::size_t i = 0; i < k; ++i)
        out.cells[static_cast<std::size_t>(plan.cell_order[i])] = 1;
    return out;
}

IndicatorGrid ball_of_mass(double m, const GridDomain& domain) {
    if (!(m > 0.0))
        throw ParameterError("ball_of_mass: mass must be positive");
    const auto k =
        static_cast<std::int64_t>(std::ceil(m / domain.cell_volume()));
    if (k > domain.cell_count())
        throw ParameterError("ball_of_mass: domain too small for mass " +
                             std::to_string(m));
    const auto plan = RearrangementPlan::build(domain);
    IndicatorGrid out(domain);
    for (std::int64_t i = 0; i < k; ++i)
        out.cells[static_cast<std::size_t>(plan.cell_order[
            static_cast<std::size_t>(i)])] = 1;
    return out;
}

double annulus_outer_radius(double m, double s, int dim) {
    if (!(m > 0.0) || !(s > 0.0))
        throw ParameterError("annulus_outer_radius: m and s must be positive");
    return std::pow(m / unit_ball_volume(dim) + std::pow(s, dim),
                    1.0 / dim);
}

std::pair<double, double>
annulus_bound_check(const IndicatorGrid& F, const KernelTable& table, double R,
                    std::optional<double> cutoff) {
    if (F.domain.dim != table.params().dim ||
        F.domain.cell_size != table.params().cell_size)
        throw DomainMismatchError("annulus_bound_check: grid/table mismatch");
    if (!(R > 0.0))
        throw ParameterError("annulus_bound_check: R must be positive");
    if (table.params().sigma >= 0.0 && !cutoff)
        throw ParameterError(
            "annulus_bound_check: sigma >= 0 requires a cutoff");
    if (cutoff && !(*cutoff > 0.0))
        throw ParameterError("annulus_bound_check: cutoff must be positive");

    const auto& dom = F.domain;
    const double hd = dom.cell_volume();
    const double cap =
        cutoff ? hd * hd * std::pow(*cutoff, -(dom.dim + table.params().sigma))
               : std::numeric_limits<double>::infinity();
    const auto center = dom.center_cell();

    // per-cell integral of the (possibly capped) kernel around the center,
    // read off the table as w(offset)/h^d
    const auto cell_value = [&](std::int64_t flat) {
        const auto idx = dom.unflatten(flat);
        const std::array<std::int32_t, 3> off{
            static_cast<std::int32_t>(idx[0] - center[0]),
            static_cast<std::int32_t>(idx[1] - center[1]),
            static_cast<std::int32_t>(idx[2] - center[2])};
        if (off == std::array<std::int32_t, 3>{0, 0, 0} &&
            !table.has_self_weight())
            return cap / hd; // capped kernel, center cell
        return std::min(table.weight(off), cap) / hd;
    };

    const auto plan = RearrangementPlan::build(dom);
    const auto c0 = dom.cell_center(center);
    const auto in_ball = [&](std::int64_t flat) {
        const auto p = dom.cell_center(dom.unflatten(flat));
        double d2 = 0.0;
        for (int a = 0; a < dom.dim; ++a) {
            const auto u = static_cast<std::size_t>(a);
            d2 += (p[u] - c0[u]) * (p[u] - c0[u]);
        }
        return d2 <= R * R;
    };

    std::vector<std::uint8_t> ball(F.cells.size(), 0);
    for (std::size_t f = 0; f < F.cells.size(); ++f) {
        if (in_ball(static_cast<std::int64_t>(f)))
            ball[f] = 1;
        else if (F.cells[f])
            throw OutOfDomainError(
                "annulus_bound_check: F not contained in B_R");
    }
    IndicatorGrid Fball(dom);
    const auto k = static_cast<std::size_t>(F.occupied_count());
    for (std::size_t i = 0; i < k; ++i)
        Fball.cells[static_cast<std::size_t>(plan.cell_order[i])] = 1;

    NeumaierSum lhs, rhs;
    for (std::size_t f = 0; f < F.cells.size(); ++f) {
        if (!ball[f])
            continue;
        const double v = cell_value(static_cast<std::int64_t>(f));
        if (!F.cells[f])
            lhs.add(v);
        if (!Fball.cells[f])
            rhs.add(v);
    }
    return {lhs.value(), rhs.value()};
}

} // namespace fp
