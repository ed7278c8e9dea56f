#pragma once

#include <optional>
#include <string>

#include "fracperim/grid.hpp"
#include "fracperim/kernel.hpp"

namespace fp {

enum class Engine { Direct, Convolution };

std::string to_string(Engine e);
std::string to_string(RenormMode m);

struct EnergyReport {
    double value = 0.0;
    double raw_energy = 0.0;
    double renorm_term = 0.0; // value = raw_energy - renorm_term
    double sigma = 0.0;
    std::string window_kind; // "inner" for H-type, "outer" for J-type
    double window = 0.0;     // requested radius (may be +inf)
    double window_effective = 0.0;
    RenormMode renorm_mode = RenormMode::None;
    Engine engine = Engine::Direct;
    std::uint64_t table_fingerprint = 0;
    std::uint64_t grid_fingerprint = 0;
    bool coverage_warning = false;

    std::string to_json() const;
};

// H^sigma_R: each occupied cell pairs with every window cell outside the set
// (out-of-domain cells count as complement). R = +inf stabilizes the window
// at diameter(E) + h; un-renormalized R = +inf requires sigma in (0,1) and
// adds the analytic tail beyond the stabilized window to raw_energy.
EnergyReport H_energy(const IndicatorGrid& E, const KernelTable& table,
                      double R, RenormMode renorm,
                      Engine engine = Engine::Direct);

// J^sigma_r: minus the pairwise sum over occupied pairs at distance >= r.
// sigma >= 0 requires r >= cell_size. Sets coverage_warning when the set's
// diameter exceeds the table reach (far pairs silently absent).
EnergyReport J_energy(const IndicatorGrid& E, const KernelTable& table,
                      double r, RenormMode renorm,
                      Engine engine = Engine::Direct);

// 0-fractional perimeter: H raw at R = 1 plus J raw at r = 1 on a sigma = 0
// table. Errors when the table does not cover diameter(E).
EnergyReport H0_perimeter(const IndicatorGrid& E, const KernelTable& table,
                          Engine engine = Engine::Direct);

// potential j^sigma_r at one cell:
// -(1/h^d) * sum_{|o*h| >= r} w(o) * target(x+o) - gamma(r).
// Summing target(x)*h^d*j(x) over cells reproduces the renormalized J value.
double pointwise_potential(std::array<std::int64_t, 3> x,
                           const IndicatorGrid& target,
                           const KernelTable& table, double r,
                           RenormMode renorm);
double pointwise_potential(std::array<std::int64_t, 3> x,
                           const DensityGrid& target, const KernelTable& table,
                           double r, RenormMode renorm);

// self-interaction under the bounded capped-plus-ramp kernel
// k(t) = 1/max{t,r}^{d+sigma} + (r-t)^+, evaluated by midpoint pairing over
// occupied cells (self pairs included; the kernel is finite at t = 0)
double modified_J(const IndicatorGrid& E, double sigma, double r);

// bilinear pairing sum_{x,o} eta1(x)*eta2(x+o)*w(o). With a cutoff r every
// weight is capped at h^{2d}*r^{-(d+sigma)}, which keeps the effective
// kernel bounded and radially non-increasing; without a cutoff the table
// must carry a self weight (sigma < 0).
double riesz_interaction(const DensityGrid& eta1, const DensityGrid& eta2,
                         const KernelTable& table,
                         std::optional<double> cutoff = std::nullopt);

} // namespace fp
