#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fracperim/util.hpp"

namespace fp {

struct KernelParams {
    int dim = 1;
    double sigma = 0.0; // in (-dim, 1)
    double cell_size = 1.0;
    int near_field_radius_cells = 4;
    double quadrature_tol = 1e-10;

    void validate() const;
    bool operator==(const KernelParams& o) const = default;
};

enum class WeightAccuracy : std::uint8_t { Integrated = 0, Midpoint = 1 };

struct KernelEntry {
    std::array<std::int32_t, 3> offset{0, 0, 0};
    double weight = 0.0;
    WeightAccuracy accuracy = WeightAccuracy::Midpoint;
};

enum class RenormMode { None, AnalyticGamma, DiscreteGamma };

// Cell-pair-integrated offset weights for the kernel |z|^{-(d+sigma)}.
// Entries are kept sorted by center distance |o*h| (ties broken
// lexicographically), which makes every half-open distance window a
// contiguous index range and gives all summations a fixed term order.
class KernelTable {
  public:
    KernelTable() = default;
    KernelTable(KernelParams params, double max_offset,
                std::vector<KernelEntry> entries, bool accuracy_warning);

    const KernelParams& params() const { return params_; }
    double max_offset() const { return max_offset_; }
    bool has_self_weight() const { return has_self_weight_; }
    bool accuracy_warning() const { return accuracy_warning_; }

    const std::vector<KernelEntry>& entries() const { return entries_; }
    const std::vector<double>& distances() const { return distances_; }

    // index range [first, last) of entries with |o*h| in [lo, hi)
    std::pair<std::size_t, std::size_t> window_range(double lo,
                                                     double hi) const;

    // weight of a specific offset; throws DivergenceError for the self
    // offset when sigma >= 0, CoverageError when the offset is not tabled
    double weight(std::array<std::int32_t, 3> offset) const;

    // sum of tabled weights with |o*h| in [lo, hi), fixed order, compensated
    double window_weight_sum(double lo, double hi) const;

    std::uint64_t fingerprint() const;

  private:
    KernelParams params_;
    double max_offset_ = 0.0;
    bool has_self_weight_ = false;
    bool accuracy_warning_ = false;
    std::vector<KernelEntry> entries_;
    std::vector<double> distances_; // |o*h|, ascending, parallel to entries_
};

// analytic renormalization constant: d*omega_d*(1-rho^{-sigma})/sigma,
// d*omega_d*log(rho) at sigma = 0; stabilized near sigma = 0
double gamma_rho(double sigma, double rho, int dim);

// limit constant gamma^sigma = d*omega_d/sigma (sigma != 0)
double gamma_limit(double sigma, int dim);

// gamma(rho2) - gamma(rho1) = integral of the kernel over the annulus
double gamma_annulus(double sigma, double rho1, double rho2, int dim);

// table-consistent discrete constant: signed sum of w(o)/h^d over offsets
// whose center distance lies in [min(1,rho), max(1,rho)); zero at rho = 1
double discrete_gamma(const KernelTable& table, double rho);

// unified renormalization constant lookup for the energy engines
double renorm_gamma(RenormMode mode, const KernelTable& table, double rho);

KernelTable build_kernel_table(const KernelParams& params, double max_offset);

// ---- FPKT table cache ----

void write_fpkt(const std::string& path, const KernelTable& table);
KernelTable read_fpkt(const std::string& path);

// exact 1D double integral of |x-y|^{-(1+sigma)} over the cell pair
// ([0,h],[k*h,(k+1)*h]); k = 0 requires sigma < 0 (exposed for test oracles)
double cell_pair_weight_1d(double sigma, double h, std::int64_t k);

} // namespace fp
